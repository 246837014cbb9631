// btc: command-line driver for the mean-field time-crystal simulator.
//
// Every file written with --out (or into --out-dir by `fig`) is accompanied by
// <file>.config.ini holding the fully resolved options; running
//   btc --config <file>.config.ini <subcommand>
// reproduces the file byte for byte.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "btc/analysis.hpp"
#include "btc/integrator.hpp"
#include "btc/metrology.hpp"
#include "btc/model.hpp"
#include "btc/sweep.hpp"

namespace {

using namespace btc;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double omega0{0.3};
    double omega_x{0.0};
    double omega_z{0.0};
    double kappa0{1.0};
    double m{0.25};
    double kappa_max{10.0};
    std::string clamp_mode{"sign-preserving"};
    bool constant_kappa{false};

    double horizon{500.0};
    double dt_out{0.05};
    double rel_tol{1e-9};
    double abs_tol{1e-11};
    double h_max{0.01};
    std::vector<double> init{0.0, 0.0, 1.0};
    bool renormalize{false};

    std::vector<double> thresholds{1e-3, 1e-2, 10.0};
    int max_multiplicity{8};
    double min_loop_area{0.1};

    std::vector<double> window;
    std::vector<double> omega0_range{0.02, 2.0, 0.02};
    std::vector<double> m_range{0.05, 4.0, 0.05};
    double delta_omega{kDefaultDeltaOmega};
    bool halving_check{false};
    int n_spins{1};
    double quad_step{1e-3};
    bool per_period{false};

    int jobs{1};
    std::string out{"-"};
    std::string meta;
    std::string out_dir{"."};
    std::string preset;
};

ModelParams model_of(const RunConfig& rc) { return ModelParams(rc.omega0, rc.omega_x, rc.omega_z); }

BathParams bath_of(const RunConfig& rc) {
    return BathParams(rc.kappa0, rc.m, rc.kappa_max, clamp_mode_from_string(rc.clamp_mode.c_str()),
                      rc.constant_kappa ? BathMode::Constant : BathMode::Lorentzian);
}

IntegratorConfig integrator_of(const RunConfig& rc) {
    IntegratorConfig cfg;
    cfg.horizon_T = rc.horizon;
    cfg.dt_out = rc.dt_out;
    cfg.rel_tol = rc.rel_tol;
    cfg.abs_tol = rc.abs_tol;
    cfg.h_max = rc.h_max;
    cfg.initial_state = {rc.init[0], rc.init[1], rc.init[2]};
    cfg.renormalize = rc.renormalize;
    cfg.validate();
    return cfg;
}

Thresholds thresholds_of(const RunConfig& rc) {
    Thresholds th;
    th.eps_tiss = rc.thresholds[0];
    th.eps_lc = rc.thresholds[1];
    th.r_btc = rc.thresholds[2];
    th.max_multiplicity = rc.max_multiplicity;
    th.min_loop_area = rc.min_loop_area;
    return th;
}

std::vector<double> range_of(const std::vector<double>& r, const char* flag) {
    if (r.size() != 3) throw UsageError(std::string(flag) + " expects start,stop,step");
    return stepped_range(r[0], r[1], r[2]);
}

SweepGrid grid_of(const RunConfig& rc) {
    SweepGrid g;
    g.omega0_values = range_of(rc.omega0_range, "--omega0-range");
    g.m_values = range_of(rc.m_range, "--m-range");
    g.omega_x = rc.omega_x;
    g.omega_z = rc.omega_z;
    g.bath = {rc.kappa0, rc.kappa_max, clamp_mode_from_string(rc.clamp_mode.c_str())};
    g.integrator = integrator_of(rc);
    g.thresholds = thresholds_of(rc);
    return g;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Resolved options as key=value lines readable by --config. Values given on the
// command line or in a config file keep their original spelling.
std::string resolved_config(const CLI::App& app) {
    std::ostringstream os;
    auto dump = [&os](const CLI::App& a, const std::string& prefix) {
        for (const CLI::Option* opt : a.get_options()) {
            const std::string name = opt->get_single_name();
            if (name == "help" || name == "config" || opt->get_configurable() == false) continue;
            std::string value;
            if (opt->count() > 0) {
                const auto& res = opt->results();
                for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
            } else if (opt->get_expected_min() == 0) {
                value = "false";
            } else {
                value = opt->get_default_str();
                if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
                    value = value.substr(1, value.size() - 2);
                }
            }
            if (value.empty()) continue;
            os << prefix << name << '=' << value << '\n';
        }
    };
    dump(app, "");
    for (const CLI::App* sub : app.get_subcommands()) dump(*sub, sub->get_name() + ".");
    return os.str();
}

class Emitter {
public:
    explicit Emitter(const CLI::App& app) : app_(app) {}

    // Writes to stdout for "-", otherwise to the file plus its config companion.
    void emit(const std::string& path, const std::function<void(std::ostream&)>& body) const {
        if (path == "-") {
            body(std::cout);
            std::cout.flush();
            return;
        }
        write_file(path, body);
        write_file(path + ".config.ini", [&](std::ostream& os) { os << resolved_config(app_); });
    }

    void emit_in_dir(const std::string& dir, const std::string& name,
                     const std::function<void(std::ostream&)>& body) const {
        const std::string path = (std::filesystem::path(dir) / name).string();
        write_file(path, body);
        std::cout << path << '\n';
    }

    void write_config(const std::string& path) const {
        write_file(path, [&](std::ostream& os) { os << resolved_config(app_); });
    }

private:
    static void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw UsageError("cannot open output file " + path);
        body(os);
        if (!os) throw std::runtime_error("write failed: " + path);
    }

    const CLI::App& app_;
};

TimeWindow window_of(const RunConfig& rc, TimeWindow fallback) {
    if (rc.window.empty()) return fallback;
    if (rc.window.size() != 2) throw UsageError("--window expects t_a,t_b");
    return {rc.window[0], rc.window[1]};
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
    os << "omega,amplitude\n";
    for (std::size_t i = 0; i < spec.freqs.size(); ++i) os << fmt(spec.freqs[i]) << ',' << fmt(spec.amps[i]) << '\n';
}

void write_kappa_csv(std::ostream& os, const BathParams& bath, const IntegratorConfig& cfg) {
    os << "t,kappa_raw,kappa\n";
    const std::size_t n = cfg.sample_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt_out;
        os << fmt(t) << ',' << fmt(kappa_raw(bath, t)) << ',' << fmt(kappa(bath, t)) << '\n';
    }
}

void report_qfi_warnings(const std::vector<QfiScanRow>& rows) {
    for (const auto& r : rows) {
        if (r.qfi.clamped_count > 0) {
            std::cerr << "warning: omega0=" << fmt(r.omega0) << ": " << r.qfi.clamped_count
                      << " negative QFI samples clamped to 0\n";
        }
        if (r.qfi.halving_warning) {
            std::cerr << "warning: omega0=" << fmt(r.omega0) << ": halving delta_omega changes the late average by "
                      << fmt(100.0 * r.qfi.halving_change) << "%\n";
        }
    }
}

int report_sweep(const std::vector<CellResult>& cells, double kappa0) {
    for (const auto* c : markovian_purity_violations(cells, kappa0)) {
        std::cerr << "note: Markovian cell omega0=" << fmt(c->omega0) << " m=" << fmt(c->m) << " labelled "
                  << to_string(c->label) << '\n';
    }
    int status = 0;
    for (const auto& c : cells) {
        if (c.label == Phase::ERROR) {
            std::cerr << "numerical failure in cell omega0=" << fmt(c.omega0) << " m=" << fmt(c.m) << ": " << c.error
                      << '\n';
            status = kExitNumerical;
        }
    }
    return status;
}

// ---- fig presets ----------------------------------------------------------

struct PresetRun {
    std::string name;
    ModelParams model;
    BathParams bath;
};

void emit_run(const Emitter& em, const std::string& dir, const PresetRun& run, const IntegratorConfig& cfg,
              const Thresholds& th, bool with_spectrum) {
    const Analysis a = analyze(run.model, run.bath, cfg, th);
    em.emit_in_dir(dir, run.name + "_trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, a.trajectory); });
    if (with_spectrum) {
        em.emit_in_dir(dir, run.name + "_spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, a.spectrum); });
    }
    em.emit_in_dir(dir, run.name + "_report.json", [&](std::ostream& os) { os << phase_report_json(a.report) << '\n'; });
    std::cerr << run.name << ": " << to_string(a.report.label) << " (norm drift " << fmt(a.trajectory.norm_drift_max)
              << ")\n";
}

int run_fig(const RunConfig& rc, const Emitter& em) {
    const IntegratorConfig cfg = integrator_of(rc);
    const Thresholds th = thresholds_of(rc);
    const ClampMode clamp = clamp_mode_from_string(rc.clamp_mode.c_str());
    const double k0 = rc.kappa0;
    const BathParams quarter(k0, 0.25 * k0, rc.kappa_max, clamp);
    const BathParams constant = constant_kappa_mode(quarter);
    const std::string& dir = rc.out_dir;
    std::filesystem::create_directories(dir);
    em.write_config((std::filesystem::path(dir) / (rc.preset + ".config.ini")).string());

    SweepGrid base;
    base.bath = {k0, rc.kappa_max, clamp};
    base.integrator = cfg;
    base.thresholds = th;

    const std::string& p = rc.preset;
    if (p == "fig1a") {
        emit_run(em, dir, {"fig1a", ModelParams(0.3 * k0), constant}, cfg, th, false);
    } else if (p == "fig1b") {
        emit_run(em, dir, {"fig1b", ModelParams(0.3 * k0), quarter}, cfg, th, false);
        em.emit_in_dir(dir, "fig1b_kappa.csv", [&](std::ostream& os) { write_kappa_csv(os, quarter, cfg); });
    } else if (p == "fig2") {
        emit_run(em, dir, {"fig2a", ModelParams(0.08 * k0), quarter}, cfg, th, true);
        emit_run(em, dir, {"fig2b", ModelParams(0.3 * k0), quarter}, cfg, th, true);
        emit_run(em, dir, {"fig2c", ModelParams(1.5 * k0), quarter}, cfg, th, true);
    } else if (p == "fig3") {
        std::vector<double> w = stepped_range(0.02 * k0, 0.5 * k0, 0.01 * k0);
        const auto rows = qfi_scan(ModelParams(), quarter, cfg, w, rc.delta_omega, rc.jobs, rc.halving_check);
        report_qfi_warnings(rows);
        em.emit_in_dir(dir, "fig3a_qfi.csv", [&](std::ostream& os) { write_qfi_csv(os, rows); });
        SweepGrid g = base;
        g.omega0_values = w;
        g.m_values = {0.25 * k0};
        const auto cells = run_sweep(g, rc.jobs);
        em.emit_in_dir(dir, "fig3b_orderparam.csv", [&](std::ostream& os) {
            os << "omega0,mu,label\n";
            for (const auto& c : cells) os << fmt(c.omega0) << ',' << fmt(c.mu) << ',' << to_string(c.label) << '\n';
        });
        return report_sweep(cells, k0);
    } else if (p == "fig4") {
        std::vector<double> ms = fig4_default_m_values();
        for (double& m : ms) m *= k0;
        const auto rows = fig4_scan(0.5 * k0, ms, base, rc.jobs);
        em.emit_in_dir(dir, "fig4_peak_ratio.csv", [&](std::ostream& os) { write_fig4_csv(os, rows); });
        int status = 0;
        for (const auto& r : rows) {
            if (r.label == Phase::ERROR) {
                std::cerr << "numerical failure at m=" << fmt(r.m) << ": " << r.error << '\n';
                status = kExitNumerical;
            }
        }
        return status;
    } else if (p == "fig5") {
        SweepGrid g = default_grid();
        g.omega0_values = stepped_range(0.02 * k0, 2.0 * k0, 0.02 * k0);
        g.m_values = stepped_range(0.05 * k0, 4.0 * k0, 0.05 * k0);
        g.bath = base.bath;
        g.integrator = cfg;
        g.thresholds = th;
        const auto cells = run_sweep(g, rc.jobs);
        em.emit_in_dir(dir, "fig5_phase_diagram.csv", [&](std::ostream& os) { write_sweep_csv(os, cells); });
        em.emit_in_dir(dir, "fig5_phase_diagram.json",
                       [&](std::ostream& os) { os << sweep_metadata_json(g, cells) << '\n'; });
        return report_sweep(cells, k0);
    } else if (p == "figB5") {
        const ModelParams general(0.2 * k0, 1.0, 0.6);
        emit_run(em, dir, {"figB5a", general, constant}, cfg, th, true);
        emit_run(em, dir, {"figB5b", general, quarter}, cfg, th, true);
    } else if (p == "figC6") {
        emit_run(em, dir, {"figC6", ModelParams(0.02 * k0), quarter}, cfg, th, true);
    }
    return 0;
}

// ---- option surface -------------------------------------------------------

void add_options(CLI::App& app, RunConfig& rc) {
    app.set_config("--config", "", "key = value config file; flags override it, it overrides defaults");

    auto* phys = "Physics";
    app.add_option("--omega0", rc.omega0, "drive frequency omega0 [kappa0]")->group(phys)->capture_default_str();
    app.add_option("--omega-x", rc.omega_x, "S_x^2 coupling omega_x [kappa0]")->group(phys)->capture_default_str();
    app.add_option("--omega-z", rc.omega_z, "S_z^2 coupling omega_z [kappa0]")->group(phys)->capture_default_str();
    app.add_option("--kappa0", rc.kappa0, "base dissipation rate kappa0 [rate units]")
        ->group(phys)
        ->capture_default_str();
    app.add_option("--m", rc.m, "bath spectral width m [kappa0]; m < 2 kappa0 is non-Markovian")
        ->group(phys)
        ->capture_default_str();
    app.add_option("--kappa-max", rc.kappa_max, "cap on |kappa(t)| [kappa0]")->group(phys)->capture_default_str();
    app.add_option("--clamp-mode", rc.clamp_mode, "cap behaviour: sign-preserving | literal-positive")
        ->group(phys)
        ->check(CLI::IsMember({"sign-preserving", "literal-positive"}))
        ->capture_default_str();
    app.add_flag("--constant-kappa", rc.constant_kappa, "use kappa(t) = kappa0 (Markovian limit)")->group(phys);

    auto* integ = "Integrator";
    app.add_option("--horizon", rc.horizon, "integration horizon T [1/kappa0]")->group(integ)->capture_default_str();
    app.add_option("--dt-out", rc.dt_out, "output sample spacing [1/kappa0]")->group(integ)->capture_default_str();
    app.add_option("--rel-tol", rc.rel_tol, "relative error tolerance [dimensionless]")
        ->group(integ)
        ->capture_default_str();
    app.add_option("--abs-tol", rc.abs_tol, "absolute error tolerance [dimensionless]")
        ->group(integ)
        ->capture_default_str();
    app.add_option("--h-max", rc.h_max, "largest internal step [1/kappa0]")->group(integ)->capture_default_str();
    app.add_option("--init", rc.init, "initial Bloch vector x,y,z [unit sphere]")
        ->group(integ)
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app.add_flag("--renormalize", rc.renormalize, "project onto the unit sphere after each step")->group(integ);

    auto* an = "Analysis";
    app.add_option("--thresholds", rc.thresholds,
                   "eps_tiss,eps_lc,r_btc: TISS amplitude [m_z], closure distance [Bloch], peak ratio [-]")
        ->group(an)
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app.add_option("--max-multiplicity", rc.max_multiplicity, "largest period multiple tried by the closure test")
        ->group(an)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--min-loop-area", rc.min_loop_area, "smallest enclosed area per period for a limit cycle [sr]")
        ->group(an)
        ->capture_default_str();
    app.add_option("--window", rc.window, "analysis window t_a,t_b [1/kappa0]; default late half (full for orderparam)")
        ->group(an)
        ->delimiter(',')
        ->expected(2);
    app.add_option("--omega0-range", rc.omega0_range, "start,stop,step of omega0 for qfi/sweep [kappa0]")
        ->group(an)
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app.add_option("--m-range", rc.m_range, "start,stop,step of m for sweep [kappa0]")
        ->group(an)
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app.add_option("--delta-omega", rc.delta_omega, "finite-difference step for QFI [kappa0]")
        ->group(an)
        ->capture_default_str();
    app.add_flag("--halving-check", rc.halving_check, "repeat QFI at delta/2 and warn above 5% change")->group(an);
    app.add_option("--n-spins", rc.n_spins, "number of spins N_b scaling the QFI [-]")
        ->group(an)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--quad-step", rc.quad_step, "quadrature panel width for nm [1/kappa0]")
        ->group(an)
        ->capture_default_str();
    app.add_flag("--per-period", rc.per_period, "nm over one period of kappa(t) instead of [0, T]")->group(an);

    auto* io = "Output";
    app.add_option("--jobs", rc.jobs, "worker threads for sweep/qfi/fig scans")
        ->group(io)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--out", rc.out, "output file, - for stdout")->group(io)->capture_default_str();
    app.add_option("--meta", rc.meta, "sweep metadata JSON (default <out>.json)")->group(io);
    app.add_option("--out-dir", rc.out_dir, "directory for fig outputs")->group(io)->capture_default_str();
}

int run(int argc, char** argv) {
    CLI::App app{"Mean-field boundary time crystal under a non-Markovian bath.\n"
                 "Times are in units of 1/kappa0, frequencies in units of kappa0."};
    app.fallthrough();
    app.require_subcommand(1);
    RunConfig rc;
    add_options(app, rc);

    auto* simulate = app.add_subcommand("simulate", "trajectory CSV t,m_x,m_y,m_z,kappa,cp_integral");
    auto* kap = app.add_subcommand("kappa", "decay-rate CSV t,kappa_raw,kappa on the output grid");
    auto* spectrum = app.add_subcommand("spectrum", "FFT CSV omega,amplitude of m_z over the window");
    auto* classify = app.add_subcommand("classify", "JSON phase report");
    auto* orderparam = app.add_subcommand("orderparam", "time-averaged m_z");
    auto* nm = app.add_subcommand("nm", "non-Markovianity measure, integral of max(-kappa, 0)");
    auto* qfi = app.add_subcommand("qfi", "QFI scan CSV omega0,qfi_per_spin_late_avg,qfi_per_spin_max,delta_omega");
    auto* sweep = app.add_subcommand("sweep", "phase-diagram CSV plus JSON metadata");
    auto* fig = app.add_subcommand("fig", "named figure presets writing into --out-dir");
    fig->add_option("preset", rc.preset, "fig1a fig1b fig2 fig3 fig4 fig5 figB5 figC6")
        ->required()
        ->check(CLI::IsMember({"fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5", "figB5", "figC6"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    const Emitter em(app);
    try {
        if (fig->parsed()) return run_fig(rc, em);

        if (*kap) {
            const BathParams bath = bath_of(rc);
            const IntegratorConfig cfg = integrator_of(rc);
            em.emit(rc.out, [&](std::ostream& os) { write_kappa_csv(os, bath, cfg); });
            return 0;
        }
        if (*nm) {
            const BathParams bath = bath_of(rc);
            const double v = rc.per_period ? nm_measure_per_period(bath, rc.quad_step)
                                           : nm_measure(bath, rc.horizon, rc.quad_step);
            em.emit(rc.out, [&](std::ostream& os) { os << fmt(v) << '\n'; });
            return 0;
        }
        if (*qfi) {
            const auto w = rc.omega0_range.size() == 3 && app.count("--omega0-range") > 0
                               ? range_of(rc.omega0_range, "--omega0-range")
                               : std::vector<double>{rc.omega0};
            auto rows = qfi_scan(model_of(rc), bath_of(rc), integrator_of(rc), w, rc.delta_omega, rc.jobs,
                                 rc.halving_check);
            for (auto& r : rows) r.qfi = qfi_total(r.qfi, rc.n_spins);
            report_qfi_warnings(rows);
            em.emit(rc.out, [&](std::ostream& os) { write_qfi_csv(os, rows); });
            return 0;
        }
        if (*sweep) {
            const SweepGrid g = grid_of(rc);
            const auto cells = run_sweep(g, rc.jobs);
            em.emit(rc.out, [&](std::ostream& os) { write_sweep_csv(os, cells); });
            std::string meta = rc.meta;
            if (meta.empty() && rc.out != "-") meta = rc.out + ".json";
            if (!meta.empty()) {
                std::ofstream os(meta, std::ios::binary);
                if (!os) throw UsageError("cannot open metadata file " + meta);
                os << sweep_metadata_json(g, cells) << '\n';
            }
            return report_sweep(cells, rc.kappa0);
        }

        const ModelParams model = model_of(rc);
        const BathParams bath = bath_of(rc);
        const IntegratorConfig cfg = integrator_of(rc);
        const Trajectory traj = integrate(model, bath, cfg);
        if (*simulate) {
            em.emit(rc.out, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
        } else if (*spectrum) {
            const Spectrum spec = power_spectrum(traj, window_of(rc, late_window(traj)));
            em.emit(rc.out, [&](std::ostream& os) { write_spectrum_csv(os, spec); });
        } else if (*classify) {
            const Spectrum spec = power_spectrum(traj, window_of(rc, late_window(traj)));
            PhaseReport r = classify_phase(traj, spec, thresholds_of(rc));
            r.nm_measure = nm_measure_per_period(bath, rc.quad_step);
            r.nm_measure_total = nm_measure(bath, rc.horizon, rc.quad_step);
            em.emit(rc.out, [&](std::ostream& os) { os << phase_report_json(r) << '\n'; });
        } else if (*orderparam) {
            const double mu = order_parameter(traj, window_of(rc, {0.0, traj.horizon()}));
            em.emit(rc.out, [&](std::ostream& os) { os << fmt(mu) << '\n'; });
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
