#pragma once

#include <geoloc/error.hpp>

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace geoloc {

/// Row-major 8-bit grayscale image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace detail {

// Reads one header token, skipping whitespace and '#' comments.
inline std::string pgm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n' && c != '\r') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c == '#') in.unget();
    // The single whitespace after maxval is consumed here, which is what
    // the binary raster requires.
    return tok;
}

inline int pgm_int(std::istream& in, const char* field) {
    const std::string tok = pgm_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::ParseError, std::string("PGM: bad ") + field + " '" + tok + "'");
    }
    return std::stoi(tok);
}

}  // namespace detail

/// Parses a binary (P5) 8-bit PGM.
inline GrayImage read_pgm(std::istream& in) {
    if (detail::pgm_token(in) != "P5") {
        throw Error(ErrorCode::ParseError, "PGM: only binary P5 images are supported");
    }
    const int w = detail::pgm_int(in, "width");
    const int h = detail::pgm_int(in, "height");
    const int maxval = detail::pgm_int(in, "maxval");
    if (w <= 0 || h <= 0) throw Error(ErrorCode::ParseError, "PGM: empty image");
    if (maxval != 255) throw Error(ErrorCode::ParseError, "PGM: maxval must be 255");
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw Error(ErrorCode::ParseError, "PGM: truncated raster");
    }
    return img;
}

inline GrayImage read_pgm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open PGM '" + path + "'");
    return read_pgm(in);
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline std::string encode_pgm(const GrayImage& img) {
    std::ostringstream os(std::ios::binary);
    write_pgm(os, img);
    return os.str();
}

}  // namespace geoloc
