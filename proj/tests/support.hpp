// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "wcs/pose.hpp"

namespace test_support {

inline std::filesystem::path source_root() { return std::filesystem::path(WCS_SOURCE_DIR); }

inline std::filesystem::path asset_path(const std::string& relative) {
    return source_root() / "assets" / relative;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Uniform random rigid transform: rotations composed about all three axes,
/// translation within +/- 2 m.
inline wcs::Pose random_rigid(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    wcs::Pose p = wcs::compose(wcs::Pose::rotation_z(angle(rng)),
                               wcs::compose(wcs::Pose::rotation_y(angle(rng)), wcs::Pose::rotation_x(angle(rng))));
    p.set_translation(dist(rng), dist(rng), dist(rng));
    return p;
}

}  // namespace test_support
