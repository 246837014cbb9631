// integrator.hpp: adaptive Dormand-Prince 5(4) integration of the mean-field
// Bloch equations under the time-dependent capped decay rate.

#pragma once

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "btc/bloch.hpp"
#include "btc/model.hpp"

namespace btc {

struct IntegratorConfig {
    double horizon_T{500.0};            // 1/kappa0
    double dt_out{0.05};                // 1/kappa0
    double rel_tol{1e-9};
    double abs_tol{1e-11};
    double h_max{0.01};                 // 1/kappa0
    BlochVector initial_state{0.0, 0.0, 1.0};
    bool renormalize{false};

    /// Throws std::invalid_argument on a violated invariant.
    void validate() const;
    std::size_t sample_count() const;
};

/// Raised when the step-size controller cannot satisfy the tolerances.
class StepSizeUnderflow : public std::runtime_error {
public:
    StepSizeUnderflow(double t, double h);
    double time() const { return time_; }

private:
    double time_;
};

inline constexpr double kCpEpsilon = 1e-9;

struct Trajectory {
    std::vector<BlochState> samples;
    std::vector<double> kappa_samples;
    std::vector<double> cp_integral;  // running integral of kappa from 0
    double norm_drift_max{0.0};       // max |‖m‖² - 1| over samples
    bool cp_violated{false};          // min(cp_integral) < -kCpEpsilon
    std::size_t accepted_steps{0};
    std::size_t rejected_steps{0};

    std::size_t size() const { return samples.size(); }
    double dt_out() const { return samples.size() > 1 ? samples[1].t - samples[0].t : 0.0; }
    double horizon() const { return samples.empty() ? 0.0 : samples.back().t; }
    double min_cp_integral() const;
};

Trajectory integrate(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg);

/// CSV with header t,m_x,m_y,m_z,kappa,cp_integral and 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace btc
