#pragma once

#include "deepc/controller.hpp"
#include "deepc/plants.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deepc {

using Json = nlohmann::ordered_json;

enum class ScenarioKind { setpoint_noload, setpoint_load, payload_sweep, long_trajectory };

std::string_view to_string(ScenarioKind kind);

struct PlantSpec {
    std::string type = "softarm";  // softarm | lti
    SoftArmParams arm;
    Matrix A, B, C, D;
    Vector x0;
    Vector output_disturbance;
    Vector noise_std;
    double sample_period = 0.1;

    /// Fresh plant with the given payload (soft arm only) and noise seed. The
    /// output disturbance only acts in closed loop, like a payload attached
    /// after the data were recorded.
    std::unique_ptr<Plant> make(double payload_g, std::uint64_t noise_seed,
                                bool closed_loop = true) const;
    Index input_dim() const;
    Index output_dim() const;
};

struct ControllerSpec {
    Index t_ini = 20;
    Index horizon = 20;
    double q = 1.0;
    double r = 1e-6;
    double lambda_g = 1e3;
    double lambda_y = 1e5;
    double u_min = 0.0;
    double u_max = 80.0;
    Vector y_lower;  // empty = unbounded
    Vector y_upper;
    bool reduce = true;
    Index svd_rank = 400;  // 0 = numerical rank; clamped to the row count
    QpSettings qp;

    DeePCParams params(Index m, Index p) const;
};

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::setpoint_noload;
    std::uint64_t seed = 1;
    int repetitions = 3;
    std::vector<ControlMode> modes{ControlMode::regularized, ControlMode::velocity};
    Index t_end = 300;
    PlantSpec plant;
    ControllerSpec controller;
    ExcitationConfig excitation;
    Index datasets = 4;
    std::vector<std::string> dataset_stems;  // load instead of collecting when set
    ReferenceSchedule reference;
    std::vector<double> payloads_g;
    double steady_fraction = 0.5;
    std::string output_dir;

    /// Fully resolved form; feeding it back through scenario_from_json gives
    /// the same scenario.
    Json to_json() const;
};

/// The subset of TOML used by scenario files: [section] headers, key = value
/// with numbers, strings, booleans and (nested, possibly multi-line) arrays,
/// '#' comments. Errors are ConfigError naming the key or line.
Json parse_toml(const std::string& text);

/// JSON if the first non-blank character is '{', TOML otherwise.
Json parse_config_text(const std::string& text);
Json load_config_file(const std::filesystem::path& path);

/// Applies defaults (per scenario kind) and validates. Unknown keys and bad
/// values raise ConfigError naming the offending "section.key".
Scenario scenario_from_json(const Json& config);

/// Standard payload set (g).
const std::vector<double>& standard_payloads();

}  // namespace deepc
