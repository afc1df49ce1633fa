#pragma once

#include "deepc/config.hpp"
#include "deepc/controller.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace deepc {

/// sqrt(mean ||y_t - ref_t||^2) over trace records [begin, end).
double compute_rmse(const ClosedLoopTrace& trace, Index begin, Index end);

/// Steady-state windows in record indices: for each reference segment the last
/// `fraction` of its samples inside the trace. `t_ini` is the step of record 0.
std::vector<std::pair<Index, Index>> steady_state_windows(const ReferenceSchedule& schedule,
                                                          Index t_ini, Index records,
                                                          double fraction);

/// RMSE over the union of the given windows.
double windowed_rmse(const ClosedLoopTrace& trace,
                     const std::vector<std::pair<Index, Index>>& windows);

struct Quartiles {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};
/// Linear-interpolation quantiles of a non-empty sample.
Quartiles quartiles(std::vector<double> values);

struct RunResult {
    ControlMode mode = ControlMode::velocity;
    double payload_g = 0.0;
    int repetition = 0;
    std::uint64_t noise_seed = 0;
    double rmse_mm = 0.0;
    std::vector<double> segment_rmse_mm;
    Index steps = 0;
    Index flagged_steps = 0;
    double input_min = 0.0;
    double input_max = 0.0;
    double mean_solve_ms = 0.0;  // not part of the metrics JSON
    bool failed = false;
    std::string error;
    ClosedLoopTrace trace;
};

struct Aggregate {
    ControlMode mode = ControlMode::velocity;
    double payload_g = 0.0;
    int count = 0;
    Quartiles stats;
};

struct ModeComparison {
    double payload_g = 0.0;
    double deepc_median = 0.0;
    double vdeepc_median = 0.0;
    double delta = 0.0;          // deepc - vdeepc
    double reduction_pct = 0.0;  // 100 * delta / deepc
};

struct MetricsReport {
    std::string scenario;
    std::string kind;
    std::string window_definition;
    std::vector<RunResult> runs;  // sorted by (mode, payload, repetition)
    std::vector<Aggregate> aggregates;
    std::vector<ModeComparison> comparisons;
    std::vector<std::string> notes;

    bool all_ok() const;
    /// Contains no wall-clock data, so identical inputs give identical bytes.
    Json to_json() const;
};

struct RunOptions {
    std::filesystem::path out_dir;  // empty = no artifacts
    int threads = 0;                // 0 = from DEEPC_KIT_THREADS / hardware
    bool write_traces = true;
    std::ostream* log = nullptr;
};

/// DEEPC_KIT_THREADS if set and positive, else the hardware concurrency.
int default_thread_count();

/// Loads the configured dataset stems or collects fresh data on the unloaded plant.
std::vector<Trajectory> obtain_datasets(const Scenario& scenario);

/// Mosaic data for one controller mode, SVD-compressed when configured. The
/// requested rank is clamped to the row count; `note` receives a message then.
ControllerData build_controller_data(const Scenario& scenario,
                                     const std::vector<Trajectory>& datasets, ControlMode mode,
                                     std::string* note = nullptr);

MetricsReport run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// metrics.json, boxplot.dat, segments.dat (multi-setpoint runs), plot.gp and
/// resolved_config.json into `dir`.
void write_artifacts(const Scenario& scenario, const MetricsReport& report,
                     const std::filesystem::path& dir, bool write_traces);

}  // namespace deepc
