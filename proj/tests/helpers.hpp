#pragma once

#include <geoloc/error.hpp>

#include <gtest/gtest.h>

#include <string>

namespace testing_helpers {

template <typename F>
void expect_code(geoloc::ErrorCode code, F&& fn) {
    try {
        fn();
        ADD_FAILURE() << "expected " << geoloc::to_string(code) << ", nothing thrown";
    } catch (const geoloc::Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

}  // namespace testing_helpers
