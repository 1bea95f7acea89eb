#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoloc {

/// Every failure the library reports maps to exactly one of these codes.
enum class ErrorCode {
    DegenerateSegment,
    OutOfLocalRange,
    InvalidFov,
    InvalidArgument,
    BehindCamera,
    HorizonRay,
    DegenerateBox,
    UnknownClass,
    BadThresholds,
    InsufficientLines,
    IllConditioned,
    NonPositiveHeight,
    HorizonAnchor,
    NonMonotoneTrace,
    FrameOutsideTrace,
    TraceTooShort,
    InvalidScenario,
    EmptyIntersection,
    NoCalibration,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateSegment: return "DegenerateSegment";
        case ErrorCode::OutOfLocalRange: return "OutOfLocalRange";
        case ErrorCode::InvalidFov: return "InvalidFov";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::HorizonRay: return "HorizonRay";
        case ErrorCode::DegenerateBox: return "DegenerateBox";
        case ErrorCode::UnknownClass: return "UnknownClass";
        case ErrorCode::BadThresholds: return "BadThresholds";
        case ErrorCode::InsufficientLines: return "InsufficientLines";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::NonPositiveHeight: return "NonPositiveHeight";
        case ErrorCode::HorizonAnchor: return "HorizonAnchor";
        case ErrorCode::NonMonotoneTrace: return "NonMonotoneTrace";
        case ErrorCode::FrameOutsideTrace: return "FrameOutsideTrace";
        case ErrorCode::TraceTooShort: return "TraceTooShort";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::EmptyIntersection: return "EmptyIntersection";
        case ErrorCode::NoCalibration: return "NoCalibration";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace geoloc
