// model.hpp: physical parameters, the time-dependent decay rate and the
// mean-field equations of motion for the collective spin.

#pragma once

#include <optional>
#include <vector>

#include "btc/bloch.hpp"

namespace btc {

/// Coherent part of the collective spin Hamiltonian. All frequencies are in
/// units of the base dissipation rate kappa0.
class ModelParams {
public:
    explicit ModelParams(double omega0 = 0.0, double omega_x = 0.0, double omega_z = 0.0);

    double omega0() const { return omega0_; }
    double omega_x() const { return omega_x_; }
    double omega_z() const { return omega_z_; }

    ModelParams with_omega0(double omega0) const { return ModelParams(omega0, omega_x_, omega_z_); }

private:
    double omega0_;
    double omega_x_;
    double omega_z_;
};

enum class ClampMode {
    SignPreserving,  // |kappa| >= kappa_max maps to sign(kappa) * kappa_max
    LiteralPositive, // |kappa| >= kappa_max maps to +kappa_max
};

enum class BathMode {
    Lorentzian, // damped Jaynes-Cummings-like rate with spectral width m
    Constant,   // kappa(t) = kappa0 for all t
};

const char* to_string(ClampMode mode);
ClampMode clamp_mode_from_string(const char* text);

/// Dissipation parameters. Branch quantities are derived at construction:
/// d = sqrt(m^2 - 2 m kappa0) when m > 2 kappa0 (Markovian), otherwise
/// d_hat = sqrt(2 m kappa0 - m^2) (non-Markovian).
class BathParams {
public:
    BathParams(double kappa0, double spectral_width_m, double kappa_max,
               ClampMode clamp_mode = ClampMode::SignPreserving,
               BathMode mode = BathMode::Lorentzian);

    double kappa0() const { return kappa0_; }
    double spectral_width_m() const { return m_; }
    double kappa_max() const { return kappa_max_; }
    ClampMode clamp_mode() const { return clamp_mode_; }
    BathMode mode() const { return mode_; }

    /// m > 2 kappa0, or a constant-rate bath.
    bool markovian() const;
    /// m == 2 kappa0 exactly, where both branches meet.
    bool on_boundary() const { return mode_ == BathMode::Lorentzian && m_ == 2.0 * kappa0_; }
    /// d in the Markovian branch, d_hat in the non-Markovian branch, 0 on the boundary.
    double branch_d() const { return d_; }
    /// omega_d = d / 2.
    double omega_d() const { return 0.5 * d_; }

    BathParams with_spectral_width(double m) const;
    BathParams with_kappa_max(double kappa_max) const;
    BathParams with_clamp_mode(ClampMode mode) const;

private:
    double kappa0_;
    double m_;
    double kappa_max_;
    ClampMode clamp_mode_;
    BathMode mode_;
    double d_;
};

/// Uncapped decay rate. Non-Markovian poles yield +-infinity.
double kappa_raw(const BathParams& bath, double t);

/// Decay rate with the kappa_max cap applied according to the clamp mode.
double kappa(const BathParams& bath, double t);

/// Markovian long-time limit 2 kappa0 m / (d + m).
double kappa_asymptotic(const BathParams& bath);

/// First pole of the uncapped non-Markovian rate; nullopt in the Markovian branch.
std::optional<double> first_pole(const BathParams& bath);

/// Sorted times in (t0, t1) where kappa(t) is not smooth: poles, cap onsets and
/// zero crossings of the non-Markovian branch. Empty for Markovian baths.
std::vector<double> kappa_breakpoints(const BathParams& bath, double t0, double t1);

/// Right-hand side of the thermodynamic-limit Bloch equations.
BlochVector mean_field_rhs(const ModelParams& model, double kappa_t, const BlochVector& s);

/// Stationary point of the main-text model (omega_x = omega_z = 0) at constant rate.
/// Returns nullopt when omega0 > kappa (no stationary point on the sphere).
/// Throws std::invalid_argument if omega_x or omega_z is nonzero or kappa <= 0.
std::optional<BlochVector> markovian_fixed_point(const ModelParams& model, double kappa_const);

/// A bath whose rate is kappa0 at all times, keeping kappa0, kappa_max and clamp mode.
BathParams constant_kappa_mode(const BathParams& bath);

} // namespace btc
