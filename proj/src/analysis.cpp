#include "btc/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include <json.hpp>

namespace btc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Index range [lo, hi) of samples whose time falls inside window.
std::pair<std::size_t, std::size_t> window_indices(const Trajectory& traj, TimeWindow window) {
    const double slack = 1e-9 * std::max(1.0, std::abs(window.t_b));
    const auto& s = traj.samples;
    auto lo = std::lower_bound(s.begin(), s.end(), window.t_a - slack,
                               [](const BlochState& a, double t) { return a.t < t; });
    auto hi = std::upper_bound(s.begin(), s.end(), window.t_b + slack,
                               [](double t, const BlochState& a) { return t < a.t; });
    return {static_cast<std::size_t>(lo - s.begin()), static_cast<std::size_t>(hi - s.begin())};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double med = v[mid];
    if (v.size() % 2 == 0) {
        med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return med;
}

// Amplitude of a Hann-windowed tone peaking at bin k, corrected for its offset from the bin centre.
double hann_peak_amplitude(const std::vector<double>& amps, std::size_t k) {
    const double a0 = amps[k];
    const double am = k > 0 ? amps[k - 1] : 0.0;
    const double ap = k + 1 < amps.size() ? amps[k + 1] : 0.0;
    if (!(a0 > 0.0)) return a0;
    const double alpha = std::max(am, ap) / a0;
    const double delta = std::clamp((2.0 * alpha - 1.0) / (alpha + 1.0), 0.0, 0.5);
    if (delta < 1e-12) return a0;
    const double x = std::numbers::pi * delta;
    return a0 * (1.0 - delta * delta) * x / std::sin(x);
}

// Catmull-Rom interpolation of the sampled Bloch vector at fractional index u.
BlochVector interpolate(const std::vector<BlochState>& s, double u) {
    const auto n = static_cast<std::ptrdiff_t>(s.size());
    auto j = static_cast<std::ptrdiff_t>(std::floor(u));
    j = std::clamp<std::ptrdiff_t>(j, 0, n - 2);
    const double f = u - static_cast<double>(j);
    const BlochVector& p1 = s[static_cast<std::size_t>(j)].m;
    const BlochVector& p2 = s[static_cast<std::size_t>(j + 1)].m;
    const BlochVector& p0 = j > 0 ? s[static_cast<std::size_t>(j - 1)].m : p1;
    const BlochVector& p3 = j + 2 < n ? s[static_cast<std::size_t>(j + 2)].m : p2;
    const double f2 = f * f;
    const double f3 = f2 * f;
    const double w0 = -0.5 * f3 + f2 - 0.5 * f;
    const double w1 = 1.5 * f3 - 2.5 * f2 + 1.0;
    const double w2 = -1.5 * f3 + 2.0 * f2 + 0.5 * f;
    const double w3 = 0.5 * f3 - 0.5 * f2;
    return w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3;
}

double closure_distance_strided(const Trajectory& traj, TimeWindow window, double lag,
                                std::size_t stride) {
    const auto& s = traj.samples;
    const double dt = traj.dt_out();
    if (s.size() < 4 || !(dt > 0.0)) return std::numeric_limits<double>::infinity();
    const auto [lo, hi] = window_indices(traj, {window.t_a, window.t_b - lag});
    if (hi <= lo) return std::numeric_limits<double>::infinity();
    const double t0 = s.front().t;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = lo; i < hi; i += stride) {
        const double u = (s[i].t + lag - t0) / dt;
        acc += distance(s[i].m, interpolate(s, u));
        ++count;
    }
    return acc / static_cast<double>(count);
}

double nm_piece(const BathParams& bath, double a, double b, double step) {
    const double len = b - a;
    if (!(len > 0.0)) return 0.0;
    auto f = [&](double t) { return std::max(-kappa(bath, t), 0.0); };
    // endpoints may sit exactly on a pole, so sample them from inside the piece
    const double nudge = 1e-10 * len;
    std::size_t n = 2 * static_cast<std::size_t>(std::ceil(len / (2.0 * step)));
    n = std::max<std::size_t>(n, 2);
    const double h = len / static_cast<double>(n);
    double acc = f(a + nudge) + f(b - nudge);
    for (std::size_t i = 1; i < n; ++i) {
        acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    }
    return acc * h / 3.0;
}

} // namespace

WindowTooShort::WindowTooShort(std::size_t samples)
    : std::runtime_error("analysis window holds " + std::to_string(samples) + " samples, need at least " +
                         std::to_string(kMinWindowSamples)) {}

TimeWindow late_window(const Trajectory& traj) {
    const double T = traj.horizon();
    return {0.5 * T, T};
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / denom));
    }
    return w;
}

std::vector<std::complex<double>> real_dft(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t n_out = n / 2 + 1;
    // FFTW picks codelets by buffer alignment; its own allocator keeps results
    // independent of where the caller's data happens to live
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n_out);
    std::copy(x.begin(), x.end(), in);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<std::complex<double>> result(n_out);
    for (std::size_t k = 0; k < n_out; ++k) result[k] = {out[k][0], out[k][1]};
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return result;
}

Spectrum signal_spectrum(std::span<const double> signal, double dt, TimeWindow window) {
    const std::size_t n = signal.size();
    if (n < kMinWindowSamples) throw WindowTooShort(n);

    const auto w = hann_window(n);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    // window-weighted mean, so no residual offset leaks into the lowest bins
    const double mean = std::inner_product(signal.begin(), signal.end(), w.begin(), 0.0) / wsum;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (signal[i] - mean) * w[i];
    const auto dft = real_dft(x);

    Spectrum spec;
    spec.window = window;
    spec.bin_width = kTwoPi / (static_cast<double>(n) * dt);
    const double f_min = 2.0 / window.length();
    for (std::size_t k = 1; k < dft.size(); ++k) {
        const double omega = spec.bin_width * static_cast<double>(k);
        if (omega <= f_min) continue;
        spec.freqs.push_back(omega);
        spec.amps.push_back(2.0 * std::abs(dft[k]) / wsum);
    }

    spec.noise_floor = 3.0 * median(spec.amps);
    const double threshold = std::max(spec.noise_floor, kAbsoluteAmplitudeFloor);
    const auto nb = static_cast<std::ptrdiff_t>(spec.amps.size());
    for (std::ptrdiff_t k = 0; k < nb; ++k) {
        const double a = spec.amps[static_cast<std::size_t>(k)];
        if (!(a > threshold)) continue;
        bool is_max = true;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, k - kPeakSeparationBins);
             j <= std::min(nb - 1, k + kPeakSeparationBins) && is_max; ++j) {
            const double b = spec.amps[static_cast<std::size_t>(j)];
            if (j < k ? b >= a : (j > k && b > a)) is_max = false;
        }
        if (is_max) {
            const auto bin = static_cast<std::size_t>(k);
            spec.peaks.push_back({spec.freqs[bin], hann_peak_amplitude(spec.amps, bin), bin});
        }
    }
    std::stable_sort(spec.peaks.begin(), spec.peaks.end(),
                     [](const SpectralPeak& p, const SpectralPeak& q) { return p.amp > q.amp; });
    return spec;
}

Spectrum power_spectrum(const Trajectory& traj, TimeWindow window) {
    if (window.t_a < -1e-9 || window.t_b > traj.horizon() * (1.0 + 1e-12) + 1e-9 ||
        !(window.t_b > window.t_a)) {
        throw std::invalid_argument("spectrum window must lie inside the trajectory");
    }
    const auto [lo, hi] = window_indices(traj, window);
    std::vector<double> mz;
    mz.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) mz.push_back(traj.samples[i].m.z);
    return signal_spectrum(mz, traj.dt_out(), window);
}

namespace {

double ratio_to_floor(const Spectrum& spec) {
    if (!(spec.noise_floor > 0.0)) return kPeakRatioCap;
    return std::min(spec.peaks[0].amp / spec.noise_floor, kPeakRatioCap);
}

} // namespace

bool is_harmonic(double omega, double base, double bin_width) {
    if (!(base > 0.0)) return false;
    const double n = std::round(omega / base);
    if (n < 2.0) return false;
    return std::abs(omega - n * base) <= (1.0 + 0.1 * n) * bin_width;
}

double peak_ratio(const Spectrum& spec) {
    if (spec.peaks.empty()) return 0.0;
    const double base = refined_dominant_frequency(spec).value_or(spec.peaks[0].omega);
    for (std::size_t i = 1; i < spec.peaks.size(); ++i) {
        if (!is_harmonic(spec.peaks[i].omega, base, spec.bin_width)) {
            return spec.peaks[0].amp / spec.peaks[i].amp;
        }
    }
    return ratio_to_floor(spec);
}

double raw_peak_ratio(const Spectrum& spec) {
    if (spec.peaks.empty()) return 0.0;
    if (spec.peaks.size() >= 2) return spec.peaks[0].amp / spec.peaks[1].amp;
    return ratio_to_floor(spec);
}

std::optional<double> refined_dominant_frequency(const Spectrum& spec) {
    if (spec.peaks.empty()) return std::nullopt;
    const std::size_t k = spec.peaks[0].bin;
    const double omega = spec.freqs[k];
    if (k == 0 || k + 1 >= spec.amps.size()) return omega;
    const double am = spec.amps[k - 1], a0 = spec.amps[k], ap = spec.amps[k + 1];
    if (!(am > 0.0 && ap > 0.0)) return omega;
    const double lm = std::log(am), l0 = std::log(a0), lp = std::log(ap);
    const double denom = lm - 2.0 * l0 + lp;
    if (!(denom < 0.0)) return omega;
    const double delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
    return omega + delta * spec.bin_width;
}

double order_parameter(const Trajectory& traj, TimeWindow window) {
    const auto [lo, hi] = window_indices(traj, window);
    if (hi - lo < 2) {
        if (hi > lo) return traj.samples[lo].m.z;
        throw std::invalid_argument("order-parameter window contains no samples");
    }
    double acc = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const auto& a = traj.samples[i - 1];
        const auto& b = traj.samples[i];
        acc += 0.5 * (a.m.z + b.m.z) * (b.t - a.t);
    }
    return acc / (traj.samples[hi - 1].t - traj.samples[lo].t);
}

double order_parameter(const Trajectory& traj) {
    return order_parameter(traj, {0.0, traj.horizon()});
}

double nm_measure(const BathParams& bath, double t0, double t1, double quadrature_step) {
    if (!(t1 >= t0)) throw std::invalid_argument("nm_measure interval must be ordered");
    if (!(quadrature_step > 0.0)) throw std::invalid_argument("quadrature step must be positive");
    double acc = 0.0;
    double a = t0;
    for (double b : kappa_breakpoints(bath, t0, t1)) {
        acc += nm_piece(bath, a, b, quadrature_step);
        a = b;
    }
    acc += nm_piece(bath, a, t1, quadrature_step);
    return acc;
}

double nm_measure(const BathParams& bath, double horizon, double quadrature_step) {
    if (!(horizon > 0.0)) throw std::invalid_argument("nm_measure horizon must be positive");
    return nm_measure(bath, 0.0, horizon, quadrature_step);
}

double nm_measure_per_period(const BathParams& bath, double quadrature_step) {
    if (bath.markovian() || bath.on_boundary()) return 0.0;
    return nm_measure(bath, 0.0, kTwoPi / bath.branch_d(), quadrature_step);
}

const char* to_string(Phase p) {
    switch (p) {
    case Phase::TISS: return "TISS";
    case Phase::BTC: return "BTC";
    case Phase::HOLC: return "HOLC";
    case Phase::IRREGULAR: return "IRREGULAR";
    case Phase::ERROR: return "ERROR";
    }
    return "ERROR";
}

double closure_distance(const Trajectory& traj, TimeWindow window, double lag) {
    return closure_distance_strided(traj, window, lag, 1);
}

std::pair<double, double> best_closure(const Trajectory& traj, TimeWindow window, double lag_lo,
                                       double lag_hi) {
    // coarse scan on a subsampled window, golden-section polish, full-resolution score
    constexpr int kScan = 24;
    constexpr std::size_t kStride = 4;
    auto cost = [&](double lag) { return closure_distance_strided(traj, window, lag, kStride); };

    double best_lag = lag_lo;
    double best = std::numeric_limits<double>::infinity();
    const double step = (lag_hi - lag_lo) / kScan;
    for (int i = 0; i <= kScan; ++i) {
        const double lag = lag_lo + step * i;
        const double c = cost(lag);
        if (c < best) {
            best = c;
            best_lag = lag;
        }
    }
    double a = std::max(lag_lo, best_lag - step);
    double b = std::min(lag_hi, best_lag + step);
    constexpr double g = 0.6180339887498949;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = cost(x1), f2 = cost(x2);
    for (int it = 0; it < 40 && (b - a) > 1e-9 * std::max(1.0, b); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    const double polished = f1 < f2 ? x1 : x2;
    const double full_polished = closure_distance(traj, window, polished);
    const double full_scan = closure_distance(traj, window, best_lag);
    if (full_scan < full_polished) return {best_lag, full_scan};
    return {polished, full_polished};
}

double loop_area(const Trajectory& traj, TimeWindow window, double period) {
    if (!(period > 0.0)) return 0.0;
    const auto n_periods = std::floor(window.length() / period);
    if (n_periods < 1.0) return 0.0;
    const auto& s = traj.samples;
    const double dt = traj.dt_out();
    const double t0 = s.front().t;
    const double t_end = window.t_a + n_periods * period;
    const auto [lo, hi] = window_indices(traj, {window.t_a, t_end});
    if (hi - lo < 2) return 0.0;
    // polygon through the samples, closed with interpolated end points
    BlochVector area{};
    auto add_edge = [&](const BlochVector& a, const BlochVector& b) {
        area += BlochVector{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    };
    const BlochVector start = interpolate(s, (window.t_a - t0) / dt);
    const BlochVector end = interpolate(s, (t_end - t0) / dt);
    add_edge(start, s[lo].m);
    for (std::size_t i = lo + 1; i < hi; ++i) add_edge(s[i - 1].m, s[i].m);
    add_edge(s[hi - 1].m, end);
    return 0.5 * norm(area) / n_periods;
}

PhaseReport classify_phase(const Trajectory& traj, const Spectrum& spec, const Thresholds& thresholds) {
    PhaseReport r;
    r.window = spec.window;
    const auto [lo, hi] = window_indices(traj, spec.window);
    if (hi - lo < kMinWindowSamples) throw WindowTooShort(hi - lo);

    double zmin = traj.samples[lo].m.z, zmax = zmin;
    for (std::size_t i = lo; i < hi; ++i) {
        zmin = std::min(zmin, traj.samples[i].m.z);
        zmax = std::max(zmax, traj.samples[i].m.z);
    }
    r.amplitude = zmax - zmin;
    r.mu = order_parameter(traj);
    r.peak_ratio = peak_ratio(spec);
    if (!spec.peaks.empty()) r.dominant_omega = spec.peaks[0].omega;

    if (r.amplitude < thresholds.eps_tiss) {
        r.label = Phase::TISS;
        return r;
    }

    const auto f1 = refined_dominant_frequency(spec);
    r.closure_error = std::numeric_limits<double>::infinity();
    if (f1 && *f1 > 0.0) {
        r.dominant_omega = *f1;
        const double base = kTwoPi / *f1;
        // half a bin of frequency uncertainty, propagated to the period
        const double rel = 0.5 * spec.bin_width / *f1;
        for (int k = 1; k <= thresholds.max_multiplicity; ++k) {
            const double p = base * k;
            const double hi_lag = p * (1.0 + rel);
            if (hi_lag > 0.5 * spec.window.length()) break;
            const auto [lag, c] = best_closure(traj, spec.window, p * (1.0 - rel), hi_lag);
            if (c < r.closure_error) {
                r.closure_error = c;
                r.period = lag;
            }
            if (c < thresholds.eps_lc) {
                r.multiplicity = k;
                r.closure_error = c;
                r.period = lag;
                break;
            }
        }
    }

    if (r.multiplicity) r.loop_area = loop_area(traj, spec.window, r.period);

    if (!r.multiplicity || r.loop_area < thresholds.min_loop_area) {
        // no return, or a closed path that only retraces an arc
        r.label = Phase::IRREGULAR;
    } else if (*r.multiplicity == 1 && r.peak_ratio >= thresholds.r_btc) {
        r.label = Phase::BTC;
    } else {
        r.label = Phase::HOLC;
    }
    return r;
}

Analysis analyze(const ModelParams& model, const BathParams& bath, const IntegratorConfig& cfg,
                 const Thresholds& thresholds) {
    Analysis a;
    a.trajectory = integrate(model, bath, cfg);
    a.spectrum = power_spectrum(a.trajectory, late_window(a.trajectory));
    a.report = classify_phase(a.trajectory, a.spectrum, thresholds);
    a.report.nm_measure = nm_measure_per_period(bath);
    a.report.nm_measure_total = nm_measure(bath, cfg.horizon_T);
    return a;
}

std::string phase_report_json(const PhaseReport& r) {
    nlohmann::ordered_json j;
    j["label"] = to_string(r.label);
    j["peak_ratio"] = r.peak_ratio;
    j["closure_error"] = std::isfinite(r.closure_error) ? nlohmann::ordered_json(r.closure_error)
                                                        : nlohmann::ordered_json(nullptr);
    j["multiplicity"] = r.multiplicity ? nlohmann::ordered_json(*r.multiplicity) : nlohmann::ordered_json(nullptr);
    j["amplitude"] = r.amplitude;
    j["mu"] = r.mu;
    j["nm_measure"] = r.nm_measure;
    j["nm_measure_total"] = r.nm_measure_total;
    j["dominant_omega"] = r.dominant_omega;
    j["period"] = r.period;
    j["loop_area"] = r.loop_area;
    j["window"] = {r.window.t_a, r.window.t_b};
    return j.dump(2);
}

} // namespace btc
