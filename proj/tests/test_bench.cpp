#include "deepc/bench.hpp"
#include "deepc/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace deepc;

namespace {

ClosedLoopTrace trace_of(const Matrix& y, const Matrix& ref) {
    ClosedLoopTrace t;
    for (Index k = 0; k < y.cols(); ++k) {
        TraceRecord r;
        r.step = k;
        r.reference = ref.col(k);
        r.output = y.col(k);
        r.input = Vector::Zero(1);
        t.records.push_back(r);
    }
    return t;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* kLtiScenario = R"({
  "scenario": {"name": "lti_check", "kind": "setpoint_noload", "seed": 4, "repetitions": 2, "t_end": 40},
  "plant": {"type": "lti", "A": [[0.8, 0.1], [0.0, 0.5]], "B": [[1.0], [0.5]], "C": [[1.0, 0.0]],
            "output_disturbance": [0.3], "noise_std": [0.001]},
  "excitation": {"length": 80, "datasets": 2},
  "controller": {"t_ini": 4, "horizon": 6, "q": 1.0, "r": 1e-4, "lambda_g": 0.01, "lambda_y": 100.0,
                 "svd_rank": 0},
  "reference": {"setpoints": [[0.5], [-0.2]], "starts": [0, 20]}
})";

std::string small_arm_toml(const std::string& name) {
    return "[scenario]\nname = \"" + name +
           "\"\nkind = \"payload_sweep\"\nrepetitions = 1\nt_end = 60\n"
           "[controller]\nt_ini = 5\nhorizon = 6\nsvd_rank = 0\n"
           "[excitation]\nlength = 200\ndatasets = 2\n"
           "[payload]\nmasses_g = [0, 228.96]\n";
}

}  // namespace

TEST_CASE("rmse examples") {
    Matrix y(2, 4), r = Matrix::Zero(2, 4);
    y << 3, 0, 0, 3, 4, 0, 0, 4;
    const auto t = trace_of(y, r);
    CHECK(compute_rmse(t, 0, 4) == doctest::Approx(std::sqrt(12.5)));
    CHECK(compute_rmse(t, 1, 3) == 0.0);
    CHECK(compute_rmse(t, 3, 4) == doctest::Approx(5.0));
    CHECK_THROWS(compute_rmse(t, 2, 2));
    CHECK(windowed_rmse(t, {{0, 1}, {3, 4}}) == doctest::Approx(5.0));
}

TEST_CASE("rmse ignores a common shift (randomized)") {
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = testing::uniform_int(rng, 1, 40);
        const Matrix y = testing::randn(rng, 2, n), r = testing::randn(rng, 2, n);
        const Vector d = testing::randn(rng, 2, 1) * 100.0;
        const Matrix ys = y.colwise() + d, rs = r.colwise() + d;
        CHECK(compute_rmse(trace_of(ys, rs), 0, n) ==
              doctest::Approx(compute_rmse(trace_of(y, r), 0, n)).epsilon(1e-9));
    }
}

TEST_CASE("quartiles and steady windows") {
    const auto q = quartiles({4, 1, 3, 2, 5});
    CHECK(q.min == 1);
    CHECK(q.q1 == 2);
    CHECK(q.median == 3);
    CHECK(q.q3 == 4);
    CHECK(q.max == 5);
    CHECK(quartiles({1, 2}).median == doctest::Approx(1.5));
    CHECK(quartiles({7}).q3 == 7);
    CHECK_THROWS(quartiles({}));

    // setpoints at steps 0 and 100, records start at t = 20, 181 records (t = 20..200)
    const ReferenceSchedule s{{{0, Vector::Zero(1)}, {100, Vector::Ones(1)}}};
    const auto w = steady_state_windows(s, 20, 181, 0.5);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == std::pair<Index, Index>{40, 80});
    CHECK(w[1] == std::pair<Index, Index>{130, 181});
}

TEST_CASE("TOML subset parsing") {
    const auto j = parse_toml(
        "# comment\n[scenario]\nname = \"a\" # trailing\nseed = 3\nflag = true\n"
        "[reference]\nsetpoints = [\n  [1.5, 2],\n  [3, -4e-1],\n]\nstarts = [0, 10]\n");
    CHECK(j["scenario"]["name"] == "a");
    CHECK(j["scenario"]["seed"] == 3);
    CHECK(j["scenario"]["flag"] == true);
    CHECK(j["reference"]["setpoints"][1][1].get<double>() == doctest::Approx(-0.4));
    CHECK_THROWS_AS(parse_toml("[scenario]\nname = \n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[scenario\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[scenario]\nseed = 1\nseed = 2\n"), ConfigError);
    CHECK(parse_config_text(" {\"scenario\": {\"name\": \"x\"}}")["scenario"]["name"] == "x");
}

TEST_CASE("config errors name the offending key") {
    auto key_of = [](const std::string& text) -> std::string {
        try {
            scenario_from_json(parse_config_text(text));
        } catch (const ConfigError& e) {
            return e.key();
        }
        return "";
    };
    CHECK(key_of("[plant]\ntype = \"lti\"\n") == "scenario");
    CHECK(key_of("[scenario]\nseed = 1\n") == "scenario.name");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\nbogus = 1\n") == "scenario.bogus");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[controller]\nlambda_g = -1\n") ==
          "controller.lambda_g");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[controller]\nt_ini = 1\n") ==
          "controller.t_ini");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\nmodes = [\"mpc\"]\n") == "scenario.modes");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[reference]\npressures = [120]\n") ==
          "reference.pressures");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[reference]\nsetpoints = [[500, 0]]\n") ==
          "reference.setpoints");
    CHECK(key_of("[scenario]\nname = \"custom\"\n") == "scenario.kind");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[nonsense]\na = 1\n") == "nonsense");
    CHECK(key_of("[scenario]\nname = \"setpoint_noload\"\n[metrics]\nsteady_fraction = 2\n") ==
          "metrics.steady_fraction");
}

TEST_CASE("scenario defaults follow the kind") {
    const auto noload = scenario_from_json(parse_toml("[scenario]\nname = \"setpoint_noload\"\n"));
    CHECK(noload.repetitions == 3);
    CHECK(noload.t_end == 300);
    CHECK(noload.payloads_g == std::vector<double>{0.0});
    CHECK(noload.controller.lambda_g == 1e3);
    CHECK(noload.controller.lambda_y == 1e5);
    CHECK(noload.controller.r == 1e-6);
    CHECK(noload.excitation.length == 601);
    CHECK(noload.datasets == 4);
    CHECK(noload.reference.segments.size() == 1);

    const auto longrun = scenario_from_json(parse_toml("[scenario]\nname = \"long_trajectory\"\n"));
    CHECK(longrun.reference.segments.size() == 5);
    CHECK(longrun.t_end == 749);
    CHECK(longrun.repetitions == 1);

    const auto sweep = scenario_from_json(parse_toml("[scenario]\nname = \"payload_sweep\"\n"));
    CHECK(sweep.payloads_g.size() == 7);
    CHECK(standard_payloads() ==
          std::vector<double>{178.4, 188.05, 196.02, 228.96, 240.43, 266.59});
}

TEST_CASE("resolved config round trips") {
    for (const char* name : {"setpoint_noload", "long_trajectory", "payload_sweep"}) {
        const auto a = scenario_from_json(parse_toml(std::string("[scenario]\nname = \"") + name + "\"\n"));
        const Json j = a.to_json();
        const auto b = scenario_from_json(j);
        CHECK(b.to_json().dump() == j.dump());
    }
    const auto lti = scenario_from_json(parse_config_text(kLtiScenario));
    CHECK(scenario_from_json(lti.to_json()).to_json().dump() == lti.to_json().dump());
}

TEST_CASE("scenario runs are reproducible byte for byte") {
    const auto sc = scenario_from_json(parse_config_text(kLtiScenario));
    const auto dir = std::filesystem::temp_directory_path() / "deepc_kit_bench_test";
    std::filesystem::remove_all(dir);
    RunOptions o1, o2;
    o1.out_dir = dir / "a";
    o2.out_dir = dir / "b";
    o1.threads = 1;
    o2.threads = 3;
    const auto r1 = run_scenario(sc, o1);
    const auto r2 = run_scenario(sc, o2);
    CHECK(r1.all_ok());
    CHECK(r1.runs.size() == 4);
    CHECK(r1.comparisons.size() == 1);
    CHECK(r1.to_json().dump() == r2.to_json().dump());
    CHECK(read_file(dir / "a" / "metrics.json") == read_file(dir / "b" / "metrics.json"));
    CHECK(std::filesystem::exists(dir / "a" / "boxplot.dat"));
    CHECK(std::filesystem::exists(dir / "a" / "segments.dat"));
    CHECK(std::filesystem::exists(dir / "a" / "resolved_config.json"));
    CHECK(std::filesystem::exists(dir / "a" / "trace_vdeepc_0.00g_rep0.csv"));
    // the velocity form removes the constant output offset, the regularized one does not
    for (const auto& c : r1.comparisons) CHECK(c.vdeepc_median < c.deepc_median);
    std::filesystem::remove_all(dir);
}

TEST_CASE("soft-arm sweep artifacts") {
    const auto sc = scenario_from_json(parse_toml(small_arm_toml("arm_check")));
    const auto report = run_scenario(sc, {});
    CHECK(report.all_ok());
    CHECK(report.runs.size() == 4);
    for (const auto& r : report.runs) {
        CHECK(r.input_min >= 0.0);
        CHECK(r.input_max <= 80.0);
        CHECK(std::isfinite(r.rmse_mm));
        CHECK(r.steps == 56);
    }
    const Json j = report.to_json();
    CHECK(j.contains("runs"));
    CHECK(j.dump().find("solve") == std::string::npos);
}

#ifdef DEEPC_KIT_BIN
TEST_CASE("command line exit codes") {
    const auto dir = std::filesystem::temp_directory_path() / "deepc_kit_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string bin = DEEPC_KIT_BIN;
    auto run = [&](const std::string& args) {
        const int rc = std::system((bin + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    std::ofstream(dir / "bad.toml") << "[scenario]\nname = \"setpoint_noload\"\nwhatever = 2\n";
    CHECK(run("run --config " + (dir / "bad.toml").string() + " --out " + (dir / "o").string()) == 2);
    CHECK(read_file(dir / "log.txt").find("scenario.whatever") != std::string::npos);
    CHECK(run("run --out x") != 0);
    std::ofstream(dir / "ok.toml") << small_arm_toml("cli_check");
    CHECK(run("collect --config " + (dir / "ok.toml").string() + " --out " + (dir / "data").string()) == 0);
    CHECK(std::filesystem::exists(dir / "data" / "dataset_1.csv"));
    CHECK(run("compare --config " + (dir / "ok.toml").string() + " --seed 9 --threads 1 --out " +
              (dir / "cmp").string()) == 0);
    const Json resolved = Json::parse(read_file(dir / "cmp" / "resolved_config.json"));
    CHECK(resolved["scenario"]["seed"] == 9);
    CHECK(std::filesystem::exists(dir / "cmp" / "metrics.json"));
    std::filesystem::remove_all(dir);
}
#endif
