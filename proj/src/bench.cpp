#include "deepc/bench.hpp"

#include "deepc/errors.hpp"
#include "deepc/trajectory_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace deepc {

double compute_rmse(const ClosedLoopTrace& trace, Index begin, Index end) {
    if (begin < 0 || end > static_cast<Index>(trace.records.size()) || begin > end)
        throw InvalidArgument("RMSE window [" + std::to_string(begin) + ", " +
                              std::to_string(end) + ") is outside the trace");
    if (begin == end) throw InvalidArgument("RMSE window is empty");
    double acc = 0.0;
    for (Index k = begin; k < end; ++k) {
        const auto& r = trace.records[static_cast<std::size_t>(k)];
        acc += (r.output - r.reference).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(end - begin));
}

std::vector<std::pair<Index, Index>> steady_state_windows(const ReferenceSchedule& schedule,
                                                          Index t_ini, Index records,
                                                          double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InvalidArgument("steady-state fraction must lie in (0, 1]");
    std::vector<std::pair<Index, Index>> out;
    const Index last = t_ini + records;  // one past the last step
    const auto& seg = schedule.segments;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        const Index s = std::max(seg[i].first, t_ini);
        const Index e = std::min(i + 1 < seg.size() ? seg[i + 1].first : last, last);
        if (e <= s) continue;
        const Index n = e - s;
        const Index keep =
            std::max<Index>(1, static_cast<Index>(std::ceil(fraction * static_cast<double>(n))));
        out.emplace_back(e - keep - t_ini, e - t_ini);
    }
    return out;
}

double windowed_rmse(const ClosedLoopTrace& trace,
                     const std::vector<std::pair<Index, Index>>& windows) {
    double acc = 0.0;
    Index count = 0;
    for (const auto& [b, e] : windows) {
        const double r = compute_rmse(trace, b, e);
        acc += r * r * static_cast<double>(e - b);
        count += e - b;
    }
    if (count == 0) throw InvalidArgument("no steady-state samples");
    return std::sqrt(acc / static_cast<double>(count));
}

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("quartiles of an empty sample");
    std::sort(v.begin(), v.end());
    auto q = [&](double f) {
        const double pos = f * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {v.front(), q(0.25), q(0.5), q(0.75), v.back()};
}

bool MetricsReport::all_ok() const {
    return std::none_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.failed; });
}

Json MetricsReport::to_json() const {
    Json j;
    j["scenario"] = scenario;
    j["kind"] = kind;
    j["steady_state_window"] = window_definition;
    j["rmse_unit"] = "mm";
    Json rs = Json::array();
    for (const auto& r : runs) {
        Json e;
        e["mode"] = std::string(to_string(r.mode));
        e["payload_g"] = r.payload_g;
        e["repetition"] = r.repetition;
        e["noise_seed"] = r.noise_seed;
        e["steps"] = r.steps;
        e["failed"] = r.failed;
        if (r.failed) e["error"] = r.error;
        else e["rmse_mm"] = r.rmse_mm;
        if (!r.segment_rmse_mm.empty()) e["segment_rmse_mm"] = r.segment_rmse_mm;
        e["flagged_steps"] = r.flagged_steps;
        e["input_range"] = {r.input_min, r.input_max};
        rs.push_back(e);
    }
    j["runs"] = rs;
    Json ag = Json::array();
    for (const auto& a : aggregates) {
        ag.push_back({{"mode", std::string(to_string(a.mode))},
                      {"payload_g", a.payload_g},
                      {"count", a.count},
                      {"median", a.stats.median},
                      {"q1", a.stats.q1},
                      {"q3", a.stats.q3},
                      {"min", a.stats.min},
                      {"max", a.stats.max}});
    }
    j["aggregates"] = ag;
    Json co = Json::array();
    for (const auto& c : comparisons) {
        co.push_back({{"payload_g", c.payload_g},
                      {"deepc_median_mm", c.deepc_median},
                      {"vdeepc_median_mm", c.vdeepc_median},
                      {"delta_mm", c.delta},
                      {"reduction_pct", c.reduction_pct}});
    }
    j["comparison"] = co;
    if (!notes.empty()) j["notes"] = notes;
    return j;
}

int default_thread_count() {
    if (const char* env = std::getenv("DEEPC_KIT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Trajectory> obtain_datasets(const Scenario& sc) {
    if (!sc.dataset_stems.empty()) {
        std::vector<Trajectory> out;
        for (const auto& stem : sc.dataset_stems) out.push_back(load_trajectory(stem));
        for (const auto& t : out) {
            if (t.input_dim() != sc.plant.input_dim() || t.output_dim() != sc.plant.output_dim())
                throw ConfigError("data.stems", "dataset dimensions do not match the plant");
        }
        return out;
    }
    auto plant = sc.plant.make(0.0, sc.excitation.seed ^ 0x5eedULL, false);
    return collect_dataset(*plant, sc.excitation, sc.datasets);
}

ControllerData build_controller_data(const Scenario& sc, const std::vector<Trajectory>& data,
                                     ControlMode mode, std::string* note) {
    const auto& c = sc.controller;
    auto clamp_rank = [&](Index rows, Index cols, Index rank) {
        const Index limit = std::min(rows, cols);
        Index r = c.svd_rank == 0 ? rank : c.svd_rank;
        if (r > limit) {
            if (note)
                *note = "svd_rank " + std::to_string(r) + " exceeds the " + std::to_string(limit) +
                        " available singular directions of the " + std::string(to_string(mode)) +
                        " data; using " + std::to_string(limit);
            r = limit;
        }
        return r;
    };
    if (mode == ControlMode::regularized) {
        HankelPartition h = build_partition(data, c.t_ini, c.horizon);
        if (!c.reduce) return h;
        const Matrix s = h.stacked();
        const Index r = clamp_rank(s.rows(), s.cols(), numerical_rank(s));
        return reduce_svd(h, r);
    }
    std::vector<DeltaTrajectory> deltas;
    for (const auto& t : data) deltas.push_back(diff_trajectory(t));
    DeltaHankelPartition dh = build_mosaic(deltas, c.t_ini, c.horizon);
    if (!c.reduce) return dh;
    const Matrix s = dh.stacked();
    const Index r = clamp_rank(s.rows(), s.cols(), numerical_rank(s));
    return reduce_svd(dh, r);
}

namespace {

struct Job {
    ControlMode mode;
    std::size_t payload_index;
    int repetition;
};

std::string payload_tag(double g) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << g;
    return os.str();
}

std::string trace_name(const RunResult& r) {
    return "trace_" + std::string(to_string(r.mode)) + "_" + payload_tag(r.payload_g) + "g_rep" +
           std::to_string(r.repetition) + ".csv";
}

}  // namespace

MetricsReport run_scenario(const Scenario& sc, const RunOptions& opt) {
    MetricsReport report;
    report.scenario = sc.name;
    report.kind = std::string(to_string(sc.kind));
    {
        std::ostringstream os;
        os << "last " << sc.steady_fraction * 100.0
           << "% of the samples after each reference change";
        report.window_definition = os.str();
    }

    const auto datasets = obtain_datasets(sc);
    if (opt.log) *opt.log << "datasets: " << datasets.size() << " x " << datasets[0].length()
                          << " samples\n";

    const Index m = sc.plant.input_dim();
    const Index p = sc.plant.output_dim();
    const DeePCParams params = sc.controller.params(m, p);

    std::map<ControlMode, ControllerData> data;
    for (ControlMode mode : sc.modes) {
        std::string note;
        data.emplace(mode, build_controller_data(sc, datasets, mode, &note));
        if (!note.empty()) {
            report.notes.push_back(note);
            if (opt.log) *opt.log << "warning: " << note << '\n';
        }
    }

    std::vector<Job> jobs;
    for (ControlMode mode : sc.modes)
        for (std::size_t pi = 0; pi < sc.payloads_g.size(); ++pi)
            for (int rep = 0; rep < sc.repetitions; ++rep) jobs.push_back({mode, pi, rep});

    std::vector<RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            RunResult& r = results[i];
            r.mode = job.mode;
            r.payload_g = sc.payloads_g[job.payload_index];
            r.repetition = job.repetition;
            r.noise_seed = sc.seed * 1000003ULL + 7919ULL * static_cast<std::uint64_t>(job.repetition + 1);
            try {
                auto plant = sc.plant.make(r.payload_g, r.noise_seed);
                Controller ctl(data.at(job.mode), params, sc.controller.qp);
                ctl.set_sample_period(datasets[0].sample_period);
                r.trace = run_closed_loop(ctl, *plant, sc.reference, sc.t_end);
                r.steps = static_cast<Index>(r.trace.size());
                r.flagged_steps = r.trace.flagged_steps();
                if (r.trace.failed) throw Error(r.trace.error);
                const auto windows = steady_state_windows(sc.reference, params.t_ini, r.steps,
                                                          sc.steady_fraction);
                r.rmse_mm = windowed_rmse(r.trace, windows);
                if (windows.size() > 1)
                    for (const auto& [b, e] : windows)
                        r.segment_rmse_mm.push_back(compute_rmse(r.trace, b, e));
                r.input_min = r.input_max = r.trace.records.front().input(0);
                double solve = 0.0;
                for (const auto& rec : r.trace.records) {
                    r.input_min = std::min(r.input_min, rec.input.minCoeff());
                    r.input_max = std::max(r.input_max, rec.input.maxCoeff());
                    solve += rec.solve_seconds;
                }
                r.mean_solve_ms = 1e3 * solve / static_cast<double>(r.steps);
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
            }
            if (opt.log) {
                std::lock_guard lock(log_mutex);
                *opt.log << to_string(r.mode) << " payload " << r.payload_g << " g rep "
                         << r.repetition << ": ";
                if (r.failed) *opt.log << "FAILED " << r.error << '\n';
                else *opt.log << "rmse " << r.rmse_mm << " mm, " << r.mean_solve_ms << " ms/step\n";
            }
        }
    };
    int threads = opt.threads > 0 ? opt.threads : default_thread_count();
    threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // jobs were generated in (mode, payload, repetition) order already; sort
    // explicitly so the report does not depend on that.
    std::stable_sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
        return std::tie(a.mode, a.payload_g, a.repetition) <
               std::tie(b.mode, b.payload_g, b.repetition);
    });
    report.runs = std::move(results);

    std::map<std::pair<ControlMode, double>, std::vector<double>> groups;
    for (const auto& r : report.runs)
        if (!r.failed) groups[{r.mode, r.payload_g}].push_back(r.rmse_mm);
    for (const auto& [key, vals] : groups)
        report.aggregates.push_back({key.first, key.second, static_cast<int>(vals.size()),
                                     quartiles(vals)});

    for (double w : sc.payloads_g) {
        auto d = groups.find({ControlMode::regularized, w});
        auto v = groups.find({ControlMode::velocity, w});
        if (d == groups.end() || v == groups.end()) continue;
        ModeComparison c;
        c.payload_g = w;
        c.deepc_median = quartiles(d->second).median;
        c.vdeepc_median = quartiles(v->second).median;
        c.delta = c.deepc_median - c.vdeepc_median;
        c.reduction_pct = c.deepc_median > 0 ? 100.0 * c.delta / c.deepc_median : 0.0;
        report.comparisons.push_back(c);
    }

    if (!opt.out_dir.empty()) write_artifacts(sc, report, opt.out_dir, opt.write_traces);
    return report;
}

void write_artifacts(const Scenario& sc, const MetricsReport& report,
                     const std::filesystem::path& dir, bool write_traces) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f) throw Error("cannot write " + (dir / name).string());
        return f;
    };

    {
        auto f = open("resolved_config.json");
        f << sc.to_json().dump(2) << '\n';
    }
    {
        auto f = open("metrics.json");
        f << report.to_json().dump(2) << '\n';
    }
    if (write_traces) {
        for (const auto& r : report.runs) {
            if (r.trace.records.empty()) continue;
            auto f = open(trace_name(r));
            write_trace_csv(r.trace, f);
        }
    }
    {
        auto f = open("boxplot.dat");
        f << "# group payload_g mode(0=deepc,1=vdeepc) repetition rmse_mm\n";
        f << std::setprecision(10);
        for (const auto& r : report.runs) {
            if (r.failed) continue;
            const auto it = std::find(sc.payloads_g.begin(), sc.payloads_g.end(), r.payload_g);
            f << (it - sc.payloads_g.begin()) + 1 << ' ' << r.payload_g << ' '
              << (r.mode == ControlMode::velocity ? 1 : 0) << ' ' << r.repetition << ' '
              << r.rmse_mm << '\n';
        }
    }
    const bool multi = sc.reference.segments.size() > 1;
    if (multi) {
        auto f = open("segments.dat");
        f << "# mode payload_g repetition segment start_step rmse_mm\n";
        f << std::setprecision(10);
        for (const auto& r : report.runs) {
            for (std::size_t s = 0; s < r.segment_rmse_mm.size(); ++s)
                f << to_string(r.mode) << ' ' << r.payload_g << ' ' << r.repetition << ' ' << s
                  << ' ' << sc.reference.segments[s].first << ' ' << r.segment_rmse_mm[s] << '\n';
        }
    }
    {
        auto f = open("plot.gp");
        f << "# gnuplot -persist plot.gp\n"
             "set datafile separator ','\n"
             "set key autotitle columnhead\n"
             "set xlabel 'time [s]'\n"
             "set ylabel 'tip position [mm]'\n";
        for (const auto& r : report.runs) {
            if (r.trace.records.empty() || !write_traces) continue;
            const std::string name = trace_name(r);
            f << "set title '" << name << "'\n"
              << "plot '" << name << "' using 1:2 with lines dt 2, '' using 1:"
              << 2 + sc.plant.output_dim() + sc.plant.input_dim()
              << " with lines\npause -1\n";
            break;
        }
        f << "set datafile separator whitespace\n"
             "set title 'steady-state RMSE per payload'\n"
             "set style fill solid 0.3\n"
             "set xlabel 'payload group'\n"
             "set ylabel 'RMSE [mm]'\n"
             "plot 'boxplot.dat' using ($1+0.2*$3-0.1):5:(0.15):3 with boxplot "
             "notitle\n";
    }
}

}  // namespace deepc
