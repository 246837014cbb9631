// sweep.hpp: parameter grids over (omega0, m) and the fixed-drive scan in m.

#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "btc/analysis.hpp"
#include "btc/integrator.hpp"
#include "btc/model.hpp"

namespace btc {

struct BathTemplate {
    double kappa0{1.0};
    double kappa_max{10.0};
    ClampMode clamp_mode{ClampMode::SignPreserving};

    BathParams at(double m) const { return BathParams(kappa0, m, kappa_max, clamp_mode); }
};

struct SweepGrid {
    std::vector<double> omega0_values;  // ascending, >= 0
    std::vector<double> m_values;       // ascending, > 0
    double omega_x{0.0};
    double omega_z{0.0};
    BathTemplate bath;
    IntegratorConfig integrator;
    Thresholds thresholds;

    /// Throws std::invalid_argument on an empty or unordered axis.
    void validate() const;
    std::size_t cell_count() const { return omega0_values.size() * m_values.size(); }
};

/// start, start + step, ... up to stop inclusive, rounded to 12 decimals so that
/// grid points such as m = 2 kappa0 land exactly.
std::vector<double> stepped_range(double start, double stop, double step);

/// omega0 in {0.02, ..., 2.0} x m in {0.05, ..., 4.0}.
SweepGrid default_grid();

struct CellResult {
    double omega0{0.0};
    double m{0.0};
    Phase label{Phase::ERROR};
    double peak_ratio{0.0};
    double mu{0.0};
    double nm_measure{0.0};  // per period of kappa(t)
    double amplitude{0.0};
    double closure_error{0.0};
    std::optional<int> multiplicity;
    double norm_drift_max{0.0};
    bool cp_violated{false};
    std::string error;  // diagnostic for ERROR cells
};

/// Single cell; integration failures become an ERROR cell carrying the message.
CellResult run_cell(double omega0, double m, const SweepGrid& grid, double nm_per_period);

/// Every cell of the grid, row-major by (m, omega0). Cells run on `parallelism`
/// OpenMP threads; results do not depend on the thread count.
std::vector<CellResult> run_sweep(const SweepGrid& grid, int parallelism);

/// Plain loop over the cells; reference for run_sweep.
std::vector<CellResult> run_sweep_serial(const SweepGrid& grid);

/// Cells with m > 2 kappa0 whose label is not TISS/BTC or whose nm_measure is nonzero.
std::vector<const CellResult*> markovian_purity_violations(const std::vector<CellResult>& cells,
                                                           double kappa0);

void write_sweep_csv(std::ostream& os, const std::vector<CellResult>& cells);

/// Metadata accompanying a sweep CSV: grid, thresholds, integrator settings, tool
/// version and the diagnostics of any ERROR cells.
std::string sweep_metadata_json(const SweepGrid& grid, const std::vector<CellResult>& cells);

struct Fig4Row {
    double m{0.0};
    double nm_measure{0.0};   // per period of kappa(t)
    double peak_ratio{0.0};
    double raw_peak_ratio{0.0};
    Phase label{Phase::ERROR};
    std::optional<int> multiplicity;
    std::string error;
};

/// Fixed drive, m scanned in the given (descending) order.
std::vector<Fig4Row> fig4_scan(double omega0, const std::vector<double>& m_values, const SweepGrid& base,
                               int parallelism);

/// m = 1.99..1.95 by 0.01, 1.9..0.1 by 0.05, 0.09..0.01 by 0.01, then 0.008, 0.006, 0.004.
std::vector<double> fig4_default_m_values();

void write_fig4_csv(std::ostream& os, const std::vector<Fig4Row>& rows);

inline constexpr const char* kToolVersion = "1.0.0";

} // namespace btc
