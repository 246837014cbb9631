#include "btc/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace btc {

namespace {

double det_half(double n2) { return std::max(0.0, (1.0 - n2) / 4.0); }

// 1 - F^2 written without the 1 - (1 + a.b)/2 cancellation.
double one_minus_f2(const BlochVector& a, const BlochVector& b) {
    const double na = norm_squared(a);
    const double nb = norm_squared(b);
    const double v = 0.25 * norm_squared(a - b) + 0.25 * (2.0 - na - nb) -
                     2.0 * std::sqrt(det_half(na) * det_half(nb));
    return v;
}

BlochVector project(const BlochVector& m) {
    const double n = norm(m);
    return n > 0.0 ? (1.0 / n) * m : m;
}

BlochVector mirror(const BlochVector& m) { return {-m.x, -m.y, m.z}; }

} // namespace

QubitBloch::QubitBloch(double x, double y, double z) : a_x(x), a_y(y), a_z(z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!std::isfinite(n) || n > 1.0 + kBlochNormSlack) {
        throw std::invalid_argument("Bloch vector norm exceeds 1: " + std::to_string(n));
    }
}

QubitBloch::QubitBloch(const BlochVector& m) : QubitBloch(m.x, m.y, m.z) {}

double fidelity_qubit(const QubitBloch& a, const QubitBloch& b) {
    const BlochVector va{a.a_x, a.a_y, a.a_z};
    const BlochVector vb{b.a_x, b.a_y, b.a_z};
    const double f2 = 0.5 * (1.0 + dot(va, vb)) +
                      2.0 * std::sqrt(det_half(norm_squared(va)) * det_half(norm_squared(vb)));
    return std::clamp(std::sqrt(std::max(f2, 0.0)), 0.0, 1.0);
}

QfiResult qfi_from_trajectories(const Trajectory& minus, const Trajectory& plus, double delta_omega) {
    if (!(delta_omega > 0.0)) throw std::invalid_argument("delta_omega must be positive");
    if (minus.size() != plus.size() || minus.size() == 0) {
        throw std::invalid_argument("qfi needs two trajectories on the same time grid");
    }
    QfiResult r;
    r.delta_omega = delta_omega;
    r.per_spin_series.reserve(minus.size());
    const double scale = 8.0 / (4.0 * delta_omega * delta_omega);
    const double t_late = 0.5 * minus.horizon();
    double acc = 0.0;
    std::size_t n_late = 0;
    for (std::size_t i = 0; i < minus.size(); ++i) {
        // mean-field states are pure; drift off the sphere is integrator error
        const BlochVector a = project(minus.samples[i].m);
        const BlochVector b = project(plus.samples[i].m);
        const double g = a == b ? 0.0 : one_minus_f2(a, b);
        const double f = std::sqrt(std::clamp(1.0 - g, 0.0, 1.0));
        double q = scale * g / (1.0 + f);
        if (q < 0.0) {
            q = 0.0;
            ++r.clamped_count;
        }
        const double t = minus.samples[i].t;
        r.per_spin_series.emplace_back(t, q);
        if (t >= t_late - 1e-9) {
            acc += q;
            ++n_late;
            r.scalar_late_max = std::max(r.scalar_late_max, q);
        }
    }
    r.scalar_late_avg = n_late ? acc / static_cast<double>(n_late) : 0.0;
    return r;
}

Trajectory integrate_signed_drive(const ModelParams& model, double omega0, const BathParams& bath,
                                  const IntegratorConfig& cfg) {
    if (omega0 >= 0.0) return integrate(model.with_omega0(omega0), bath, cfg);
    IntegratorConfig mirrored = cfg;
    mirrored.initial_state = mirror(cfg.initial_state);
    Trajectory traj = integrate(model.with_omega0(-omega0), bath, mirrored);
    for (auto& s : traj.samples) s.m = mirror(s.m);
    return traj;
}

QfiResult qfi_per_spin(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg,
                       double delta_omega, bool check_halving) {
    if (!(delta_omega > 0.0)) throw std::invalid_argument("delta_omega must be positive");
    const double w0 = model.omega0();
    const double drives[4] = {w0 - delta_omega, w0 + delta_omega, w0 - 0.5 * delta_omega,
                              w0 + 0.5 * delta_omega};
    const int n = check_halving ? 4 : 2;
    std::vector<Trajectory> runs(static_cast<std::size_t>(n));
    std::string failure;
    bool failed = false;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        try {
            runs[static_cast<std::size_t>(i)] = integrate_signed_drive(model, drives[i], bath, cfg);
        } catch (...) {
#pragma omp critical(btc_qfi_failure)
            failed = true;
        }
    }
    if (failed) {
        // rerun serially so the original exception type and message propagate
        for (int i = 0; i < n; ++i) integrate_signed_drive(model, drives[i], bath, cfg);
    }
    QfiResult r = qfi_from_trajectories(runs[0], runs[1], delta_omega);
    if (check_halving) {
        const QfiResult half = qfi_from_trajectories(runs[2], runs[3], 0.5 * delta_omega);
        const double denom = std::max(std::abs(r.scalar_late_avg), 1e-300);
        r.halving_change = std::abs(half.scalar_late_avg - r.scalar_late_avg) / denom;
        r.halving_warning = r.halving_change > kHalvingTolerance;
    }
    return r;
}

QfiResult qfi_total(const QfiResult& result, int n_spins) {
    if (n_spins < 1) throw std::invalid_argument("n_spins must be at least 1");
    QfiResult out = result;
    const double n = static_cast<double>(n_spins);
    for (auto& [t, q] : out.per_spin_series) q *= n;
    out.scalar_late_avg *= n;
    out.scalar_late_max *= n;
    return out;
}

std::vector<QfiScanRow> qfi_scan(const ModelParams& model, const BathParams& bath,
                                 const IntegratorConfig& cfg, const std::vector<double>& omega0_values,
                                 double delta_omega, int jobs, bool check_halving) {
    if (jobs < 1) throw std::invalid_argument("jobs must be positive");
    std::vector<QfiScanRow> rows(omega0_values.size());
    const auto n = static_cast<std::ptrdiff_t>(omega0_values.size());
    bool failed = false;
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            rows[k] = {omega0_values[k],
                       qfi_per_spin(model.with_omega0(omega0_values[k]), bath, cfg, delta_omega,
                                    check_halving)};
        } catch (...) {
#pragma omp critical(btc_qfi_failure)
            failed = true;
        }
    }
    if (failed) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            qfi_per_spin(model.with_omega0(omega0_values[k]), bath, cfg, delta_omega, false);
        }
    }
    return rows;
}

void write_qfi_csv(std::ostream& os, const std::vector<QfiScanRow>& rows) {
    os << "omega0,qfi_per_spin_late_avg,qfi_per_spin_max,delta_omega\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", row.omega0, row.qfi.scalar_late_avg,
                      row.qfi.scalar_late_max, row.qfi.delta_omega);
        os << buf;
    }
}

} // namespace btc
