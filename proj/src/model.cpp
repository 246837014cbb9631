#include "btc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace btc {

ModelParams::ModelParams(double omega0, double omega_x, double omega_z)
    : omega0_(omega0), omega_x_(omega_x), omega_z_(omega_z) {
    if (!std::isfinite(omega0) || omega0 < 0.0) {
        throw std::invalid_argument("omega0 must be finite and non-negative, got " + std::to_string(omega0));
    }
    if (!std::isfinite(omega_x) || !std::isfinite(omega_z)) {
        throw std::invalid_argument("omega_x and omega_z must be finite");
    }
}

const char* to_string(ClampMode mode) {
    return mode == ClampMode::SignPreserving ? "sign-preserving" : "literal-positive";
}

ClampMode clamp_mode_from_string(const char* text) {
    if (std::strcmp(text, "sign-preserving") == 0) return ClampMode::SignPreserving;
    if (std::strcmp(text, "literal-positive") == 0) return ClampMode::LiteralPositive;
    throw std::invalid_argument(std::string("unknown clamp mode: ") + text);
}

BathParams::BathParams(double kappa0, double spectral_width_m, double kappa_max,
                       ClampMode clamp_mode, BathMode mode)
    : kappa0_(kappa0), m_(spectral_width_m), kappa_max_(kappa_max), clamp_mode_(clamp_mode),
      mode_(mode), d_(0.0) {
    if (!(kappa0 > 0.0) || !std::isfinite(kappa0)) {
        throw std::invalid_argument("kappa0 must be positive");
    }
    if (!(spectral_width_m > 0.0) || !std::isfinite(spectral_width_m)) {
        throw std::invalid_argument("spectral width m must be positive");
    }
    if (!(kappa_max > kappa0)) {
        throw std::invalid_argument("kappa_max must exceed kappa0");
    }
    const double disc = m_ * m_ - 2.0 * m_ * kappa0_;
    d_ = std::sqrt(std::abs(disc));
}

bool BathParams::markovian() const {
    return mode_ == BathMode::Constant || m_ > 2.0 * kappa0_;
}

BathParams BathParams::with_spectral_width(double m) const {
    return BathParams(kappa0_, m, kappa_max_, clamp_mode_, mode_);
}

BathParams BathParams::with_kappa_max(double kappa_max) const {
    return BathParams(kappa0_, m_, kappa_max, clamp_mode_, mode_);
}

BathParams BathParams::with_clamp_mode(ClampMode mode) const {
    return BathParams(kappa0_, m_, kappa_max_, mode, mode_);
}

double kappa_raw(const BathParams& bath, double t) {
    const double k0 = bath.kappa0();
    const double m = bath.spectral_width_m();
    if (bath.mode() == BathMode::Constant) return k0;
    if (bath.on_boundary()) {
        return m * k0 * t / (1.0 + 0.5 * m * t);
    }
    const double d = bath.branch_d();
    const double x = 0.5 * t * d;
    if (bath.markovian()) {
        // sinh/cosh ratio written through tanh so large t cannot overflow
        const double th = std::tanh(x);
        return 2.0 * m * k0 * th / (d + m * th);
    }
    const double s = std::sin(x);
    return 2.0 * m * k0 * s / (d * std::cos(x) + m * s);
}

double kappa(const BathParams& bath, double t) {
    const double raw = kappa_raw(bath, t);
    const double cap = bath.kappa_max();
    if (std::abs(raw) < cap) return raw;
    if (bath.clamp_mode() == ClampMode::LiteralPositive) return cap;
    return std::signbit(raw) ? -cap : cap;
}

double kappa_asymptotic(const BathParams& bath) {
    if (bath.mode() == BathMode::Constant) return bath.kappa0();
    if (!bath.markovian() && !bath.on_boundary()) {
        throw std::domain_error("no long-time limit in the non-Markovian branch");
    }
    const double m = bath.spectral_width_m();
    return 2.0 * bath.kappa0() * m / (bath.branch_d() + m);
}

std::optional<double> first_pole(const BathParams& bath) {
    if (bath.markovian() || bath.on_boundary()) return std::nullopt;
    const double d = bath.branch_d();
    const double m = bath.spectral_width_m();
    return 2.0 * (std::numbers::pi - std::atan(d / m)) / d;
}

std::vector<double> kappa_breakpoints(const BathParams& bath, double t0, double t1) {
    std::vector<double> out;
    if (bath.markovian() || bath.on_boundary() || !(t1 > t0)) return out;
    const double d = bath.branch_d();
    const double m = bath.spectral_width_m();
    const double k0 = bath.kappa0();
    const double kmax = bath.kappa_max();
    constexpr double pi = std::numbers::pi;

    // With u = tan(t d / 2) the rate is 2 m k0 u / (d + m u); each level is hit once per
    // half-turn of the phase, so every breakpoint family is an arithmetic sequence in t.
    auto add_family = [&](double phase) {
        const double period = 2.0 * pi / d;
        double t = 2.0 * phase / d;
        if (t < t0) t += std::ceil((t0 - t) / period) * period;
        for (; t < t1; t += period) {
            if (t > t0) out.push_back(t);
        }
    };
    auto phase_of = [&](double tan_value) {
        double x = std::atan(tan_value);
        if (x <= 0.0) x += pi;
        return x;
    };
    add_family(pi);                                              // zero crossings
    add_family(phase_of(-d / m));                                // poles
    add_family(phase_of(kmax * d / (m * (2.0 * k0 - kmax))));    // kappa_raw = +kappa_max
    add_family(phase_of(-kmax * d / (m * (2.0 * k0 + kmax))));   // kappa_raw = -kappa_max
    std::sort(out.begin(), out.end());
    return out;
}

BlochVector mean_field_rhs(const ModelParams& model, double kappa_t, const BlochVector& s) {
    const double w0 = model.omega0();
    const double wx = model.omega_x();
    const double wz = model.omega_z();
    return {
        -2.0 * wz * s.y * s.z + kappa_t * s.x * s.z,
        2.0 * (wz - wx) * s.x * s.z - w0 * s.z + kappa_t * s.y * s.z,
        w0 * s.y - kappa_t * (s.x * s.x + s.y * s.y) + 2.0 * wx * s.x * s.y,
    };
}

std::optional<BlochVector> markovian_fixed_point(const ModelParams& model, double kappa_const) {
    if (model.omega_x() != 0.0 || model.omega_z() != 0.0) {
        throw std::invalid_argument("fixed-point oracle requires omega_x = omega_z = 0");
    }
    if (!(kappa_const > 0.0)) {
        throw std::invalid_argument("fixed-point oracle requires a positive rate");
    }
    const double r = model.omega0() / kappa_const;
    if (r > 1.0) return std::nullopt;
    return BlochVector{0.0, r, -std::sqrt(1.0 - r * r)};
}

BathParams constant_kappa_mode(const BathParams& bath) {
    return BathParams(bath.kappa0(), bath.spectral_width_m(), bath.kappa_max(), bath.clamp_mode(),
                      BathMode::Constant);
}

} // namespace btc
