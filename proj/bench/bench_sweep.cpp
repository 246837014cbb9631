// Serial reference sweep against the OpenMP sweep on the same grid.

#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "btc/sweep.hpp"

using namespace btc;

namespace {

template <class F>
double seconds(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string csv(const std::vector<CellResult>& cells) {
    std::ostringstream os;
    write_sweep_csv(os, cells);
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Times the serial and parallel (omega0, m) sweeps."};
    int jobs = omp_get_num_procs();
    double w_step = 0.1, m_step = 0.25, horizon = 500.0;
    app.add_option("--jobs", jobs, "threads for the parallel sweep")->check(CLI::PositiveNumber);
    app.add_option("--omega0-step", w_step, "grid step in omega0 over [0.1, 2] [kappa0]")->check(CLI::PositiveNumber);
    app.add_option("--m-step", m_step, "grid step in m over [0.25, 4] [kappa0]")->check(CLI::PositiveNumber);
    app.add_option("--horizon", horizon, "integration horizon [1/kappa0]")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    SweepGrid grid;
    grid.omega0_values = stepped_range(w_step, 2.0, w_step);
    grid.m_values = stepped_range(m_step, 4.0, m_step);
    grid.integrator.horizon_T = horizon;

    std::vector<CellResult> serial, parallel;
    const double ts = seconds([&] { serial = run_sweep_serial(grid); });
    const double tp = seconds([&] { parallel = run_sweep(grid, jobs); });
    const bool same = csv(serial) == csv(parallel);

    std::printf("cells            %zu\n", grid.cell_count());
    std::printf("processors       %d\n", omp_get_num_procs());
    std::printf("serial           %.3f s (%.2f ms/cell)\n", ts, 1e3 * ts / static_cast<double>(grid.cell_count()));
    std::printf("parallel (%2d)    %.3f s (%.2f ms/cell)\n", jobs, tp, 1e3 * tp / static_cast<double>(grid.cell_count()));
    std::printf("speedup          %.2fx\n", ts / tp);
    std::printf("outputs          %s\n", same ? "identical" : "DIFFER");
    return same ? 0 : 1;
}
