// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "wcs/pose.hpp"

namespace wcs {

/// Shortest round-trip decimal rendering; byte-stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline std::string format_pose(const Pose& p) {
    std::string out = "pose{t=(";
    out += format_double(p.tx()) + ", " + format_double(p.ty()) + ", " + format_double(p.tz());
    out += "), R=(";
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            out += format_double(p.at(r, c));
            if (c < 2) out += ", ";
        }
        if (r < 2) out += "; ";
    }
    out += ")}";
    return out;
}

inline bool starts_with(std::string_view text, std::string_view prefix) {
    return text.size() >= prefix.size() && text.substr(0, prefix.size()) == prefix;
}

inline bool contains(std::string_view text, std::string_view needle) {
    return text.find(needle) != std::string_view::npos;
}

inline std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && (text[b] == ' ' || text[b] == '\t' || text[b] == '\r' || text[b] == '\n')) ++b;
    while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\r' || text[e - 1] == '\n')) --e;
    return std::string(text.substr(b, e - b));
}

}  // namespace wcs
