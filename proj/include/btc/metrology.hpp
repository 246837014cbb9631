// metrology.hpp: quantum Fisher information with respect to omega0 from
// pairs of mean-field trajectories.

#pragma once

#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "btc/analysis.hpp"
#include "btc/integrator.hpp"
#include "btc/model.hpp"

namespace btc {

/// Bloch vector of a single-spin reduced state, rho = (I + a . sigma) / 2.
struct QubitBloch {
    double a_x{0.0};
    double a_y{0.0};
    double a_z{1.0};

    QubitBloch() = default;
    QubitBloch(double x, double y, double z);
    explicit QubitBloch(const BlochVector& m);
};

inline constexpr double kBlochNormSlack = 1e-8;
inline constexpr double kDefaultDeltaOmega = 1e-4;
inline constexpr double kHalvingTolerance = 0.05;

/// Closed-form Uhlmann root fidelity of two qubit states.
double fidelity_qubit(const QubitBloch& a, const QubitBloch& b);

struct QfiResult {
    std::vector<std::pair<double, double>> per_spin_series;  // (t, QFI per spin)
    double scalar_late_avg{0.0};
    double scalar_late_max{0.0};
    double delta_omega{0.0};
    std::size_t clamped_count{0};    // negatives reset to 0
    double halving_change{0.0};      // relative change of scalar_late_avg at delta/2
    bool halving_warning{false};     // halving_change > kHalvingTolerance
};

/// 8 (1 - F) / (2 delta)^2 sample by sample from trajectories at omega0 - delta and
/// omega0 + delta. Late statistics are taken over [T/2, T].
QfiResult qfi_from_trajectories(const Trajectory& minus, const Trajectory& plus, double delta_omega);

/// Integrates omega0 +- delta from cfg.initial_state. Drives below zero use the exact
/// symmetry (omega0, m_x, m_y) -> (-omega0, -m_x, -m_y) of the equations of motion.
/// With check_halving the computation is repeated at delta/2 to fill halving_change.
QfiResult qfi_per_spin(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg,
                       double delta_omega = kDefaultDeltaOmega, bool check_halving = true);

/// Trajectory at a signed drive; negative omega0 goes through the mirror symmetry.
Trajectory integrate_signed_drive(const ModelParams& model, double omega0, const BathParams& bath,
                                  const IntegratorConfig& cfg);

/// Total QFI of n_spins factorized spins.
QfiResult qfi_total(const QfiResult& result, int n_spins);

struct QfiScanRow {
    double omega0{0.0};
    QfiResult qfi;
};

/// qfi_per_spin over omega0_values, cells in parallel; output order follows the input.
std::vector<QfiScanRow> qfi_scan(const ModelParams& model, const BathParams& bath,
                                 const IntegratorConfig& cfg, const std::vector<double>& omega0_values,
                                 double delta_omega, int jobs, bool check_halving = false);

/// CSV omega0,qfi_per_spin_late_avg,qfi_per_spin_max,delta_omega.
void write_qfi_csv(std::ostream& os, const std::vector<QfiScanRow>& rows);

} // namespace btc
