#pragma once

#include <cmath>

namespace btc {

/// Normalized magnetization (m_x, m_y, m_z) of the collective spin.
struct BlochVector {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    constexpr BlochVector& operator+=(const BlochVector& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    friend constexpr BlochVector operator+(BlochVector a, const BlochVector& b) { return a += b; }
    friend constexpr BlochVector operator-(const BlochVector& a, const BlochVector& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend constexpr BlochVector operator*(double s, const BlochVector& a) {
        return {s * a.x, s * a.y, s * a.z};
    }
    friend constexpr bool operator==(const BlochVector&, const BlochVector&) = default;
};

constexpr double dot(const BlochVector& a, const BlochVector& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr double norm_squared(const BlochVector& a) { return dot(a, a); }

inline double norm(const BlochVector& a) { return std::sqrt(norm_squared(a)); }

inline double distance(const BlochVector& a, const BlochVector& b) { return norm(a - b); }

/// A Bloch vector at a given time (units of 1/kappa0).
struct BlochState {
    double t{0.0};
    BlochVector m{};
};

} // namespace btc
