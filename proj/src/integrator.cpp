#include "btc/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace btc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// (m_x, m_y, m_z, running integral of kappa)
using State = std::array<double, 4>;

struct Rhs {
    const ModelParams& model;
    const BathParams& bath;

    State operator()(double t, const State& y) const {
        const double k = kappa(bath, t);
        const BlochVector d = mean_field_rhs(model, k, {y[0], y[1], y[2]});
        return {d.x, d.y, d.z, k};
    }
};

template <typename... Terms>
State combine(const State& y, double h, const Terms&... terms) {
    State out = y;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        ((acc += terms.first * (*terms.second)[i]), ...);
        out[i] += h * acc;
    }
    return out;
}

std::pair<double, const State*> w(double c, const State& k) { return {c, &k}; }

} // namespace

void IntegratorConfig::validate() const {
    if (!(horizon_T > 0.0) || !std::isfinite(horizon_T)) {
        throw std::invalid_argument("horizon must be positive");
    }
    if (!(dt_out > 0.0) || dt_out > horizon_T / 100.0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("dt_out must lie in (0, horizon/100]");
    }
    if (!(h_max > 0.0) || h_max > dt_out) {
        throw std::invalid_argument("h_max must lie in (0, dt_out]");
    }
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (std::abs(norm_squared(initial_state) - 1.0) > 1e-10) {
        throw std::invalid_argument("initial state must lie on the unit sphere");
    }
}

std::size_t IntegratorConfig::sample_count() const {
    return static_cast<std::size_t>(std::floor(horizon_T / dt_out + 1e-9)) + 1;
}

StepSizeUnderflow::StepSizeUnderflow(double t, double h)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "step size underflow at t = " << t << " (h = " << h << ")";
          return os.str();
      }()),
      time_(t) {}

double Trajectory::min_cp_integral() const {
    return cp_integral.empty() ? 0.0 : *std::min_element(cp_integral.begin(), cp_integral.end());
}

Trajectory integrate(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg) {
    cfg.validate();
    const Rhs f{model, bath};
    const std::size_t n_out = cfg.sample_count();

    Trajectory traj;
    traj.samples.reserve(n_out);
    traj.kappa_samples.reserve(n_out);
    traj.cp_integral.reserve(n_out);

    auto record = [&](double t, const State& y) {
        const BlochVector m{y[0], y[1], y[2]};
        traj.samples.push_back({t, m});
        traj.kappa_samples.push_back(kappa(bath, t));
        traj.cp_integral.push_back(y[3]);
        traj.norm_drift_max = std::max(traj.norm_drift_max, std::abs(norm_squared(m) - 1.0));
    };

    State y{cfg.initial_state.x, cfg.initial_state.y, cfg.initial_state.z, 0.0};
    double t = 0.0;
    record(t, y);

    State k1 = f(t, y);
    double h = cfg.h_max;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t i = 1; i < n_out; ++i) {
        const double t_target = static_cast<double>(i) * cfg.dt_out;
        while (t < t_target) {
            bool clipped = false;
            double step = std::min(h, cfg.h_max);
            if (t + step >= t_target) {
                step = t_target - t;
                clipped = true;
            }
            const double h_min = 64.0 * eps * std::max(1.0, std::abs(t));
            if (step < h_min && !clipped) throw StepSizeUnderflow(t, step);

            const State k2 = f(t + c2 * step, combine(y, step, w(a21, k1)));
            const State k3 = f(t + c3 * step, combine(y, step, w(a31, k1), w(a32, k2)));
            const State k4 = f(t + c4 * step, combine(y, step, w(a41, k1), w(a42, k2), w(a43, k3)));
            const State k5 = f(t + c5 * step,
                               combine(y, step, w(a51, k1), w(a52, k2), w(a53, k3), w(a54, k4)));
            const State k6 = f(t + step, combine(y, step, w(a61, k1), w(a62, k2), w(a63, k3),
                                                 w(a64, k4), w(a65, k5)));
            const State y_new = combine(y, step, w(b1, k1), w(b3, k3), w(b4, k4), w(b5, k5), w(b6, k6));
            const double t_new = clipped ? t_target : t + step;
            const State k7 = f(t_new, y_new);

            double err = 0.0;
            for (std::size_t c = 0; c < y.size(); ++c) {
                const double e = step * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] +
                                         e6 * k6[c] + e7 * k7[c]);
                const double scale =
                    cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[c]), std::abs(y_new[c]));
                err = std::max(err, std::abs(e) / scale);
            }

            if (err <= 1.0) {
                t = t_new;
                y = y_new;
                k1 = k7;
                if (cfg.renormalize) {
                    const double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
                    y[0] /= r;
                    y[1] /= r;
                    y[2] /= r;
                    k1 = f(t, y);
                }
                ++traj.accepted_steps;
                const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
                // a clipped step says nothing about the admissible size
                if (!clipped) h = step * grow;
            } else {
                ++traj.rejected_steps;
                h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
                if (h < h_min) throw StepSizeUnderflow(t, h);
            }
        }
        record(t, y);
    }

    traj.cp_violated = traj.min_cp_integral() < -kCpEpsilon;
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,m_x,m_y,m_z,kappa,cp_integral\n";
    char buf[256];
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj.samples[i];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.m.x, s.m.y,
                      s.m.z, traj.kappa_samples[i], traj.cp_integral[i]);
        os << buf;
    }
}

} // namespace btc
