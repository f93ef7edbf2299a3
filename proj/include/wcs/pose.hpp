// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace wcs {

/// Error thrown when a pose fails its rigid-transform invariants.
class PoseError : public std::runtime_error {
public:
    explicit PoseError(const std::string& what) : std::runtime_error(what) {}
};

/// Rigid transform stored as a 4x4 homogeneous matrix, row-major,
/// translation in meters. The bottom row is always exactly (0,0,0,1);
/// the rotation block must stay orthonormal with det +1.
class Pose {
public:
    Pose() : m_{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1} {}

    explicit Pose(const std::array<double, 16>& m) : m_(m) {}

    static Pose identity() { return Pose{}; }

    static Pose translation(double x, double y, double z) {
        Pose p;
        p.m_[3] = x;
        p.m_[7] = y;
        p.m_[11] = z;
        return p;
    }

    static Pose rotation_x(double rad) {
        Pose p;
        const double c = std::cos(rad), s = std::sin(rad);
        p.m_[5] = c;
        p.m_[6] = -s;
        p.m_[9] = s;
        p.m_[10] = c;
        return p;
    }

    static Pose rotation_y(double rad) {
        Pose p;
        const double c = std::cos(rad), s = std::sin(rad);
        p.m_[0] = c;
        p.m_[2] = s;
        p.m_[8] = -s;
        p.m_[10] = c;
        return p;
    }

    static Pose rotation_z(double rad) {
        Pose p;
        const double c = std::cos(rad), s = std::sin(rad);
        p.m_[0] = c;
        p.m_[1] = -s;
        p.m_[4] = s;
        p.m_[5] = c;
        return p;
    }

    double at(std::size_t row, std::size_t col) const { return m_[row * 4 + col]; }
    double& at(std::size_t row, std::size_t col) { return m_[row * 4 + col]; }

    const std::array<double, 16>& raw() const { return m_; }

    double tx() const { return m_[3]; }
    double ty() const { return m_[7]; }
    double tz() const { return m_[11]; }

    void set_translation(double x, double y, double z) {
        m_[3] = x;
        m_[7] = y;
        m_[11] = z;
    }

    /// Returns a copy offset by (dx, dy, dz) in the world frame, rotation
    /// unchanged. This is the pose arithmetic scripts see as translated().
    Pose translated(double dx, double dy, double dz) const {
        Pose p = *this;
        p.m_[3] += dx;
        p.m_[7] += dy;
        p.m_[11] += dz;
        return p;
    }

    /// Infinity-norm deviation of R^T R from the identity.
    double orthonormality_error() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < 3; ++k) {
                    dot += at(k, i) * at(k, j);
                }
                const double target = (i == j) ? 1.0 : 0.0;
                worst = std::max(worst, std::fabs(dot - target));
            }
        }
        return worst;
    }

    double rotation_determinant() const {
        return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
               at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
               at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    }

    bool bottom_row_exact() const {
        return m_[12] == 0.0 && m_[13] == 0.0 && m_[14] == 0.0 && m_[15] == 1.0;
    }

    bool is_valid(double eps = 1e-9) const {
        if (!bottom_row_exact()) return false;
        for (double v : m_) {
            if (!std::isfinite(v)) return false;
        }
        if (orthonormality_error() > eps) return false;
        if (std::fabs(rotation_determinant() - 1.0) > eps) return false;
        return true;
    }

    void validate(double eps = 1e-9) const {
        if (!bottom_row_exact()) throw PoseError("pose bottom row is not (0,0,0,1)");
        for (double v : m_) {
            if (!std::isfinite(v)) throw PoseError("pose contains a non-finite value");
        }
        if (orthonormality_error() > eps) throw PoseError("pose rotation block is not orthonormal");
        if (std::fabs(rotation_determinant() - 1.0) > eps) throw PoseError("pose rotation determinant is not +1");
    }

    friend Pose compose(const Pose& a, const Pose& b);

    Pose operator*(const Pose& rhs) const { return compose(*this, rhs); }

    bool operator==(const Pose& rhs) const { return m_ == rhs.m_; }
    bool operator!=(const Pose& rhs) const { return m_ != rhs.m_; }

private:
    std::array<double, 16> m_;
};

/// Homogeneous composition a then... note convention: (a*b) maps a point p
/// as a*(b*p), i.e. b is applied first in the composed frame chain.
inline Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                acc += a.at(r, k) * b.at(k, c);
            }
            out.at(r, c) = acc;
        }
    }
    out.at(3, 0) = 0.0;
    out.at(3, 1) = 0.0;
    out.at(3, 2) = 0.0;
    out.at(3, 3) = 1.0;
    return out;
}

/// Analytic rigid inverse: (R, t) -> (R^T, -R^T t).
inline Pose invert(const Pose& a) {
    Pose out;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            out.at(r, c) = a.at(c, r);
        }
    }
    for (std::size_t r = 0; r < 3; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            acc += out.at(r, k) * a.at(k, 3);
        }
        out.at(r, 3) = -acc;
    }
    return out;
}

/// Max absolute elementwise difference between the two matrices.
inline double pose_distance(const Pose& a, const Pose& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        worst = std::max(worst, std::fabs(a.raw()[i] - b.raw()[i]));
    }
    return worst;
}

inline bool approx_equal(const Pose& a, const Pose& b, double eps = 1e-9) {
    return pose_distance(a, b) <= eps;
}

/// Euclidean distance between the translation components only.
inline double translation_distance(const Pose& a, const Pose& b) {
    const double dx = a.tx() - b.tx();
    const double dy = a.ty() - b.ty();
    const double dz = a.tz() - b.tz();
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Axis-aligned box, world frame, meters.
struct Aabb {
    std::array<double, 3> min{0, 0, 0};
    std::array<double, 3> max{0, 0, 0};

    static Aabb centered(double cx, double cy, double cz, double hx, double hy, double hz) {
        return Aabb{{cx - hx, cy - hy, cz - hz}, {cx + hx, cy + hy, cz + hz}};
    }

    bool contains(double x, double y, double z) const {
        return x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1] && z >= min[2] && z <= max[2];
    }

    /// Open-interval overlap: boxes that merely touch do not collide.
    bool overlaps(const Aabb& other) const {
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(min[i] < other.max[i] && other.min[i] < max[i])) return false;
        }
        return true;
    }
};

}  // namespace wcs
