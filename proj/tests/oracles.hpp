// oracles.hpp: independent reference computations shared by the tests.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "btc/metrology.hpp"

namespace oracles {

using btc::BlochVector;
using btc::QubitBloch;

using cd = std::complex<double>;
using Mat2 = std::array<cd, 4>;  // row-major

inline Mat2 density(const QubitBloch& a) {
    return {cd(0.5 * (1.0 + a.a_z)), cd(0.5 * a.a_x, -0.5 * a.a_y), cd(0.5 * a.a_x, 0.5 * a.a_y),
            cd(0.5 * (1.0 - a.a_z))};
}

inline Mat2 mul(const Mat2& p, const Mat2& q) {
    return {p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2],
            p[2] * q[1] + p[3] * q[3]};
}

// Eigenvalues of a Hermitian 2x2 matrix, ascending.
inline std::array<double, 2> eigenvalues(const Mat2& h) {
    const double a = h[0].real(), d = h[3].real();
    const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(h[1]));
    return {0.5 * (a + d) - r, 0.5 * (a + d) + r};
}

// Principal square root of a positive semidefinite Hermitian 2x2 matrix by eigendecomposition.
inline Mat2 sqrtm(const Mat2& h) {
    const auto [l0, l1] = eigenvalues(h);
    const double s0 = std::sqrt(std::max(l0, 0.0)), s1 = std::sqrt(std::max(l1, 0.0));
    if (l1 - l0 < 1e-300) return {cd(s0), cd(0.0), cd(0.0), cd(s0)};
    // h = l0 P0 + l1 P1 with P1 = (h - l0 I) / (l1 - l0)
    Mat2 p1{h[0] - l0, h[1], h[2], h[3] - l0};
    for (auto& v : p1) v /= (l1 - l0);
    const Mat2 p0{1.0 - p1[0], -p1[1], -p1[2], 1.0 - p1[3]};
    Mat2 out;
    for (int i = 0; i < 4; ++i) out[i] = s0 * p0[i] + s1 * p1[i];
    return out;
}

inline double fidelity_oracle(const QubitBloch& a, const QubitBloch& b) {
    const Mat2 r = sqrtm(density(a));
    const Mat2 m = mul(mul(r, density(b)), r);
    const auto [l0, l1] = eigenvalues(m);
    return std::sqrt(std::max(l0, 0.0)) + std::sqrt(std::max(l1, 0.0));
}

inline QubitBloch random_bloch(std::mt19937_64& rng, double radius) {
    std::normal_distribution<double> g;
    BlochVector v{g(rng), g(rng), g(rng)};
    v = (radius / btc::norm(v)) * v;
    return QubitBloch(v);
}

} // namespace oracles
