#include "btc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <stdexcept>

#include <json.hpp>

namespace btc {

namespace {

using ojson = nlohmann::ordered_json;

void require_ascending(const std::vector<double>& v, const char* name, bool allow_zero) {
    if (v.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0 || (!allow_zero && v[i] == 0.0)) {
            throw std::invalid_argument(std::string(name) + " grid holds an inadmissible value");
        }
        if (i > 0 && !(v[i] > v[i - 1])) {
            throw std::invalid_argument(std::string(name) + " grid must be strictly ascending");
        }
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<int>& k) { return k ? std::to_string(*k) : ""; }

} // namespace

void SweepGrid::validate() const {
    require_ascending(omega0_values, "omega0", true);
    require_ascending(m_values, "m", false);
    integrator.validate();
    BathParams(bath.kappa0, m_values.front(), bath.kappa_max, bath.clamp_mode);
}

std::vector<double> stepped_range(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) throw std::invalid_argument("bad range");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
}

SweepGrid default_grid() {
    SweepGrid g;
    g.omega0_values = stepped_range(0.02, 2.0, 0.02);
    g.m_values = stepped_range(0.05, 4.0, 0.05);
    return g;
}

CellResult run_cell(double omega0, double m, const SweepGrid& grid, double nm_per_period) {
    CellResult c;
    c.omega0 = omega0;
    c.m = m;
    c.nm_measure = nm_per_period;
    try {
        const Analysis a = analyze(ModelParams(omega0, grid.omega_x, grid.omega_z), grid.bath.at(m),
                                   grid.integrator, grid.thresholds);
        c.label = a.report.label;
        c.peak_ratio = a.report.peak_ratio;
        c.mu = a.report.mu;
        c.amplitude = a.report.amplitude;
        c.closure_error = a.report.closure_error;
        c.multiplicity = a.report.multiplicity;
        c.norm_drift_max = a.trajectory.norm_drift_max;
        c.cp_violated = a.trajectory.cp_violated;
    } catch (const std::exception& e) {
        c.label = Phase::ERROR;
        c.error = e.what();
    }
    return c;
}

namespace {

std::vector<double> row_nm(const SweepGrid& grid) {
    std::vector<double> nm;
    nm.reserve(grid.m_values.size());
    for (double m : grid.m_values) nm.push_back(nm_measure_per_period(grid.bath.at(m)));
    return nm;
}

} // namespace

std::vector<CellResult> run_sweep(const SweepGrid& grid, int parallelism) {
    if (parallelism < 1) throw std::invalid_argument("parallelism must be positive");
    grid.validate();
    const std::vector<double> nm = row_nm(grid);
    const std::size_t n_w = grid.omega0_values.size();
    std::vector<CellResult> cells(grid.cell_count());
    const auto n = static_cast<std::ptrdiff_t>(cells.size());
    // each cell owns its slot, so completion order cannot affect the output
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const std::size_t row = k / n_w;
        cells[k] = run_cell(grid.omega0_values[k % n_w], grid.m_values[row], grid, nm[row]);
    }
    return cells;
}

std::vector<CellResult> run_sweep_serial(const SweepGrid& grid) {
    grid.validate();
    const std::vector<double> nm = row_nm(grid);
    std::vector<CellResult> cells;
    cells.reserve(grid.cell_count());
    for (std::size_t r = 0; r < grid.m_values.size(); ++r) {
        for (double w : grid.omega0_values) cells.push_back(run_cell(w, grid.m_values[r], grid, nm[r]));
    }
    return cells;
}

std::vector<const CellResult*> markovian_purity_violations(const std::vector<CellResult>& cells,
                                                           double kappa0) {
    std::vector<const CellResult*> out;
    for (const auto& c : cells) {
        if (!(c.m > 2.0 * kappa0)) continue;
        const bool label_ok = c.label == Phase::TISS || c.label == Phase::BTC;
        if (!label_ok || c.nm_measure != 0.0) out.push_back(&c);
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<CellResult>& cells) {
    os << "omega0,m,label,peak_ratio,mu,nm_measure,amplitude,closure_error,multiplicity,norm_drift_max,"
          "cp_violated\n";
    for (const auto& c : cells) {
        os << format_double(c.omega0) << ',' << format_double(c.m) << ',' << to_string(c.label) << ','
           << format_double(c.peak_ratio) << ',' << format_double(c.mu) << ','
           << format_double(c.nm_measure) << ',' << format_double(c.amplitude) << ','
           << format_double(c.closure_error) << ',' << format_optional(c.multiplicity) << ','
           << format_double(c.norm_drift_max) << ',' << (c.cp_violated ? "true" : "false") << '\n';
    }
}

std::string sweep_metadata_json(const SweepGrid& grid, const std::vector<CellResult>& cells) {
    ojson j;
    j["tool_version"] = kToolVersion;
    j["omega0_values"] = grid.omega0_values;
    j["m_values"] = grid.m_values;
    j["omega_x"] = grid.omega_x;
    j["omega_z"] = grid.omega_z;
    j["kappa0"] = grid.bath.kappa0;
    j["kappa_max"] = grid.bath.kappa_max;
    j["clamp_mode"] = to_string(grid.bath.clamp_mode);
    const auto& ic = grid.integrator;
    j["integrator"] = {{"horizon", ic.horizon_T},
                       {"dt_out", ic.dt_out},
                       {"rel_tol", ic.rel_tol},
                       {"abs_tol", ic.abs_tol},
                       {"h_max", ic.h_max},
                       {"initial_state", {ic.initial_state.x, ic.initial_state.y, ic.initial_state.z}},
                       {"renormalize", ic.renormalize}};
    const auto& th = grid.thresholds;
    j["thresholds"] = {{"eps_tiss", th.eps_tiss},
                       {"eps_lc", th.eps_lc},
                       {"r_btc", th.r_btc},
                       {"max_multiplicity", th.max_multiplicity},
                       {"min_loop_area", th.min_loop_area}};
    j["nm_measure"] = "integral of max(-kappa, 0) over one period of kappa(t)";
    j["order"] = "row-major by (m, omega0)";
    ojson errors = ojson::array();
    for (const auto& c : cells) {
        if (c.label == Phase::ERROR) errors.push_back({{"omega0", c.omega0}, {"m", c.m}, {"message", c.error}});
    }
    j["errors"] = errors;
    return j.dump(2);
}

std::vector<Fig4Row> fig4_scan(double omega0, const std::vector<double>& m_values, const SweepGrid& base,
                               int parallelism) {
    if (parallelism < 1) throw std::invalid_argument("parallelism must be positive");
    for (double m : m_values) {
        if (!(m > 0.0)) throw std::invalid_argument("fig4 scan needs m > 0");
    }
    const ModelParams model(omega0, base.omega_x, base.omega_z);
    std::vector<Fig4Row> rows(m_values.size());
    const auto n = static_cast<std::ptrdiff_t>(m_values.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        row.m = m_values[static_cast<std::size_t>(i)];
        try {
            const BathParams bath = base.bath.at(row.m);
            row.nm_measure = nm_measure_per_period(bath);
            const Analysis a = analyze(model, bath, base.integrator, base.thresholds);
            row.peak_ratio = a.report.peak_ratio;
            row.raw_peak_ratio = raw_peak_ratio(a.spectrum);
            row.label = a.report.label;
            row.multiplicity = a.report.multiplicity;
        } catch (const std::exception& e) {
            row.label = Phase::ERROR;
            row.error = e.what();
        }
    }
    return rows;
}

std::vector<double> fig4_default_m_values() {
    std::vector<double> m;
    for (double v : stepped_range(1.95, 1.99, 0.01)) m.push_back(v);
    for (double v : stepped_range(0.1, 1.9, 0.05)) m.push_back(v);
    for (double v : stepped_range(0.01, 0.09, 0.01)) m.push_back(v);
    m.push_back(0.008);
    m.push_back(0.006);
    m.push_back(0.004);
    std::sort(m.begin(), m.end(), std::greater<>());
    return m;
}

void write_fig4_csv(std::ostream& os, const std::vector<Fig4Row>& rows) {
    os << "m,nm_measure,peak_ratio,raw_peak_ratio,label,multiplicity\n";
    for (const auto& r : rows) {
        os << format_double(r.m) << ',' << format_double(r.nm_measure) << ',' << format_double(r.peak_ratio)
           << ',' << format_double(r.raw_peak_ratio) << ',' << to_string(r.label) << ','
           << format_optional(r.multiplicity) << '\n';
    }
}

} // namespace btc
