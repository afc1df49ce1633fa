// deepc-kit: data collection and closed-loop scenario runner.

#include "deepc/bench.hpp"
#include "deepc/errors.hpp"
#include "deepc/trajectory_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

struct Args {
    std::string config;
    std::string out;
    long long seed = -1;
    std::string mode;
    int threads = 0;
    bool no_traces = false;
};

deepc::Scenario load_scenario(const Args& a, const std::string& command) {
    deepc::Json j = deepc::load_config_file(a.config);
    if (a.seed >= 0) {
        if (!j.contains("scenario") || !j["scenario"].is_object())
            throw deepc::ConfigError("scenario", "missing [scenario] section");
        j["scenario"]["seed"] = a.seed;
        if (j.contains("excitation") && j["excitation"].is_object())
            j["excitation"].erase("seed");
    }
    std::string mode = a.mode;
    if (command == "compare") mode = "both";
    if (!mode.empty()) {
        if (!j.contains("scenario") || !j["scenario"].is_object())
            throw deepc::ConfigError("scenario", "missing [scenario] section");
        if (mode == "both") j["scenario"]["modes"] = {"deepc", "vdeepc"};
        else j["scenario"]["modes"] = {mode};
    }
    if (command == "sweep" && j.contains("scenario") && j["scenario"].is_object() &&
        !(j.contains("payload") && j["payload"].is_object() && j["payload"].contains("masses_g"))) {
        std::vector<double> w{0.0};
        for (double g : deepc::standard_payloads()) w.push_back(g);
        j["payload"]["masses_g"] = w;
    }
    return deepc::scenario_from_json(j);
}

int do_collect(const Args& a) {
    const deepc::Scenario sc = load_scenario(a, "collect");
    const auto data = deepc::obtain_datasets(sc);
    std::filesystem::create_directories(a.out);
    deepc::Json resolved = sc.to_json();
    std::vector<std::string> stems;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto stem = (std::filesystem::path(a.out) / ("dataset_" + std::to_string(i))).string();
        deepc::save_trajectory(data[i], stem);
        stems.push_back(stem);
    }
    std::vector<deepc::Matrix> inputs;
    for (const auto& t : data) inputs.push_back(t.inputs);
    const deepc::Index L = sc.controller.t_ini + sc.controller.horizon;
    const bool pe = deepc::check_collective_pe(inputs, deepc::kDefaultOrderBound + L);
    std::ofstream(std::filesystem::path(a.out) / "resolved_config.json") << resolved.dump(2) << '\n';
    std::cout << "collected " << data.size() << " datasets of " << data[0].length()
              << " samples into " << a.out << "\n"
              << "collective PE of order " << deepc::kDefaultOrderBound + L << ": "
              << (pe ? "yes" : "no") << '\n';
    return 0;
}

int do_run(const Args& a, const std::string& command) {
    const deepc::Scenario sc = load_scenario(a, command);
    deepc::RunOptions opt;
    opt.out_dir = a.out;
    opt.threads = a.threads;
    opt.write_traces = !a.no_traces;
    opt.log = &std::cerr;
    const auto report = deepc::run_scenario(sc, opt);

    std::cout << "scenario " << sc.name << " (" << report.kind << "), steady-state window: "
              << report.window_definition << "\n";
    std::cout << std::left << std::setw(8) << "mode" << std::setw(12) << "payload_g"
              << std::setw(6) << "runs" << std::setw(12) << "median_mm" << std::setw(12)
              << "q1" << "q3\n";
    for (const auto& ag : report.aggregates) {
        std::cout << std::left << std::setw(8) << deepc::to_string(ag.mode) << std::setw(12)
                  << ag.payload_g << std::setw(6) << ag.count << std::setw(12) << ag.stats.median
                  << std::setw(12) << ag.stats.q1 << ag.stats.q3 << '\n';
    }
    if (!report.comparisons.empty()) {
        std::cout << "\ncomparison (median RMSE, mm)\n";
        for (const auto& c : report.comparisons)
            std::cout << "  payload " << c.payload_g << " g: deepc " << c.deepc_median
                      << "  vdeepc " << c.vdeepc_median << "  reduction " << std::fixed
                      << std::setprecision(1) << c.reduction_pct << "%\n"
                      << std::defaultfloat << std::setprecision(6);
    }
    for (const auto& r : report.runs)
        if (r.failed)
            std::cerr << "run failed: " << deepc::to_string(r.mode) << " payload " << r.payload_g
                      << " rep " << r.repetition << ": " << r.error << '\n';
    std::cout << "artifacts in " << a.out << '\n';
    return report.all_ok() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"velocity-form and regularized DeePC on simulated plants"};
    app.require_subcommand(1);
    Args args;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "scenario file (TOML subset or JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory")->required();
        sub->add_option("--seed", args.seed, "override scenario.seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--mode", args.mode, "controller mode(s)")
            ->check(CLI::IsMember({"deepc", "vdeepc", "both"}));
        sub->add_option("--threads", args.threads, "worker threads (default DEEPC_KIT_THREADS)");
        sub->add_flag("--no-traces", args.no_traces, "skip per-run trace CSV files");
    };
    auto* collect = app.add_subcommand("collect", "record excitation datasets on the plant");
    auto* run = app.add_subcommand("run", "run a scenario");
    auto* sweep = app.add_subcommand("sweep", "run a scenario over the payload list");
    auto* compare = app.add_subcommand("compare", "run both controllers and report the deltas");
    for (auto* s : {collect, run, sweep, compare}) add_common(s);

    CLI11_PARSE(app, argc, argv);

    try {
        if (collect->parsed()) return do_collect(args);
        if (run->parsed()) return do_run(args, "run");
        if (sweep->parsed()) return do_run(args, "sweep");
        return do_run(args, "compare");
    } catch (const deepc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
