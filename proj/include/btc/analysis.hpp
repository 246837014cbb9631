// analysis.hpp: spectral diagnostics, order parameter, non-Markovianity
// measure and the dynamical-phase classifier.

#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "btc/integrator.hpp"
#include "btc/model.hpp"

namespace btc {

class WindowTooShort : public std::runtime_error {
public:
    explicit WindowTooShort(std::size_t samples);
};

inline constexpr std::size_t kMinWindowSamples = 256;
inline constexpr double kPeakRatioCap = 1e6;
inline constexpr int kPeakSeparationBins = 5;
// Peaks below this calibrated amplitude are rounding residue, not signal.
inline constexpr double kAbsoluteAmplitudeFloor = 1e-10;

struct TimeWindow {
    double t_a{0.0};
    double t_b{0.0};
    double length() const { return t_b - t_a; }
};

/// Late window [T/2, T] of a trajectory.
TimeWindow late_window(const Trajectory& traj);

struct SpectralPeak {
    double omega{0.0};   // angular frequency, units of kappa0
    double amp{0.0};     // tone amplitude, corrected for the offset from the bin centre
    std::size_t bin{0};  // index into Spectrum::freqs
};

struct Spectrum {
    std::vector<double> freqs;  // angular, strictly increasing, DC excluded
    std::vector<double> amps;   // amplitude-calibrated Hann magnitudes
    TimeWindow window;
    std::vector<SpectralPeak> peaks;  // dominant first
    double noise_floor{0.0};          // 3 x median(amps)
    double bin_width{0.0};            // angular
};

/// Hann window w_n = 0.5 (1 - cos(2 pi n / (N - 1))).
std::vector<double> hann_window(std::size_t n);

/// One-sided DFT (bins 0..N/2) of a real sequence.
std::vector<std::complex<double>> real_dft(std::span<const double> x);

/// Hann-windowed, mean-subtracted spectrum of an arbitrary uniformly sampled signal.
/// Throws WindowTooShort below kMinWindowSamples samples.
Spectrum signal_spectrum(std::span<const double> signal, double dt, TimeWindow window);

/// Spectrum of m_z over the samples of traj that fall in window.
Spectrum power_spectrum(const Trajectory& traj, TimeWindow window);

/// True when omega lies within (1 + 0.1 n) bins of n * base for some integer n >= 2.
bool is_harmonic(double omega, double base, double bin_width);

/// Ratio of the dominant peak to the largest peak that is not an integer
/// harmonic of it. With no competing peak the dominant amplitude is compared
/// to the noise floor, capped at kPeakRatioCap. Empty peak list gives 0.
double peak_ratio(const Spectrum& spec);

/// peaks[0] / peaks[1] with no harmonic exclusion (same fallbacks as peak_ratio).
double raw_peak_ratio(const Spectrum& spec);

/// Dominant angular frequency refined by log-parabolic interpolation across
/// the peak bin; nullopt when there is no peak.
std::optional<double> refined_dominant_frequency(const Spectrum& spec);

/// Trapezoidal time average of m_z over window.
double order_parameter(const Trajectory& traj, TimeWindow window);
double order_parameter(const Trajectory& traj);

/// Integral of max(-kappa(t), 0) over [t0, t1] by composite Simpson panels of
/// width <= quadrature_step, split at the non-smooth points of kappa.
double nm_measure(const BathParams& bath, double t0, double t1, double quadrature_step);
double nm_measure(const BathParams& bath, double horizon, double quadrature_step = 1e-3);

/// nm_measure over one period 2 pi / d_hat of kappa(t); 0 for Markovian baths
/// and on the branch boundary, where kappa never turns negative.
double nm_measure_per_period(const BathParams& bath, double quadrature_step = 1e-3);

enum class Phase { TISS, BTC, HOLC, IRREGULAR, ERROR };

const char* to_string(Phase p);

struct Thresholds {
    double eps_tiss{1e-3};   // peak-to-peak m_z
    double eps_lc{1e-2};     // mean Bloch-space closure distance
    double r_btc{10.0};      // peak ratio
    int max_multiplicity{8};
    double min_loop_area{0.1};  // enclosed vector area per period; a great circle gives pi
};

struct PhaseReport {
    Phase label{Phase::ERROR};
    double peak_ratio{0.0};
    double closure_error{0.0};       // at the accepted multiplicity, else the best candidate
    std::optional<int> multiplicity;
    double amplitude{0.0};           // peak-to-peak m_z over the window
    double mu{0.0};                  // order parameter over the full trajectory
    double nm_measure{0.0};          // per period of kappa(t)
    double nm_measure_total{0.0};    // over [0, T]
    double dominant_omega{0.0};
    double period{0.0};              // refined return time at the accepted multiplicity
    double loop_area{0.0};           // |enclosed vector area| of the closed orbit
    TimeWindow window;
};

/// Mean ‖m(t) - m(t + lag)‖ over t in [window.t_a, window.t_b - lag], with m(t + lag)
/// obtained by cubic interpolation between samples.
double closure_distance(const Trajectory& traj, TimeWindow window, double lag);

/// Smallest closure distance for lags in [lag_lo, lag_hi]; returns {lag, distance}.
std::pair<double, double> best_closure(const Trajectory& traj, TimeWindow window, double lag_lo,
                                       double lag_hi);

/// Magnitude of the vector area (1/2) \oint m x dm per period, averaged over the
/// whole periods that fit in window. Zero for an orbit that retraces an arc.
double loop_area(const Trajectory& traj, TimeWindow window, double period);

/// Classifies the dynamics over spec.window. The nm_measure fields are left at 0;
/// callers holding the bath fill them in (see analyze()).
PhaseReport classify_phase(const Trajectory& traj, const Spectrum& spec,
                           const Thresholds& thresholds = {});

/// integrate -> spectrum over the late window -> classify -> nm_measure.
struct Analysis {
    Trajectory trajectory;
    Spectrum spectrum;
    PhaseReport report;
};

Analysis analyze(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg,
                 const Thresholds& thresholds = {});

/// Single JSON object with snake_case keys mirroring PhaseReport.
std::string phase_report_json(const PhaseReport& r);

} // namespace btc
