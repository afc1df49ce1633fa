#include "deepc/config.hpp"

#include "deepc/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace deepc {

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::setpoint_noload: return "setpoint_noload";
        case ScenarioKind::setpoint_load: return "setpoint_load";
        case ScenarioKind::payload_sweep: return "payload_sweep";
        case ScenarioKind::long_trajectory: return "long_trajectory";
    }
    return "?";
}

const std::vector<double>& standard_payloads() {
    static const std::vector<double> w{178.4, 188.05, 196.02, 228.96, 240.43, 266.59};
    return w;
}

// ---------------------------------------------------------------- TOML subset

namespace {

class TomlParser {
public:
    explicit TomlParser(const std::string& text) : s_(text) {}

    Json parse() {
        Json root = Json::object();
        Json* table = &root;
        std::string section;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                ++i_;
                skip_ws();
                const std::string name = bare_key();
                skip_ws();
                expect(']', name);
                if (root.contains(name))
                    throw ConfigError(name, "section declared twice (line " + line() + ")");
                root[name] = Json::object();
                table = &root[name];
                section = name;
                end_of_line(name);
                continue;
            }
            const std::string key = bare_key();
            const std::string full = section.empty() ? key : section + "." + key;
            skip_ws();
            expect('=', full);
            skip_ws();
            Json v = value(full);
            if (table->contains(key)) throw ConfigError(full, "duplicate key");
            (*table)[key] = std::move(v);
            end_of_line(full);
        }
        return root;
    }

private:
    bool eof() const { return i_ >= s_.size(); }
    char peek() const { return s_[i_]; }

    std::string line() const {
        return std::to_string(1 + std::count(s_.begin(), s_.begin() + static_cast<long>(i_), '\n'));
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++i_;
    }
    void skip_comment() {
        if (!eof() && peek() == '#')
            while (!eof() && peek() != '\n') ++i_;
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (!eof() && peek() == '\n') {
                ++i_;
                continue;
            }
            break;
        }
    }
    // inside arrays newlines and comments are whitespace
    void skip_array_ws() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (!eof() && peek() == '\n') {
                ++i_;
                continue;
            }
            break;
        }
    }
    void end_of_line(const std::string& key) {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() != '\n')
            throw ConfigError(key, "unexpected text after value (line " + line() + ")");
        ++i_;
    }
    void expect(char c, const std::string& key) {
        if (eof() || peek() != c)
            throw ConfigError(key, std::string("expected '") + c + "' (line " + line() + ")");
        ++i_;
    }

    std::string bare_key() {
        const std::size_t start = i_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                          peek() == '-'))
            ++i_;
        if (start == i_) throw ConfigError("line " + line(), "expected a key");
        return s_.substr(start, i_ - start);
    }

    Json value(const std::string& key) {
        if (eof()) throw ConfigError(key, "missing value");
        const char c = peek();
        if (c == '"') return string_value(key);
        if (c == '[') return array_value(key);
        if (s_.compare(i_, 4, "true") == 0) {
            i_ += 4;
            return true;
        }
        if (s_.compare(i_, 5, "false") == 0) {
            i_ += 5;
            return false;
        }
        return number_value(key);
    }

    Json string_value(const std::string& key) {
        ++i_;
        std::string out;
        while (!eof() && peek() != '"') {
            if (peek() == '\n') throw ConfigError(key, "unterminated string");
            if (peek() == '\\' && i_ + 1 < s_.size()) {
                ++i_;
                const char e = peek();
                out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
            } else {
                out += peek();
            }
            ++i_;
        }
        expect('"', key);
        return out;
    }

    Json array_value(const std::string& key) {
        ++i_;
        Json arr = Json::array();
        skip_array_ws();
        if (!eof() && peek() == ']') {
            ++i_;
            return arr;
        }
        while (true) {
            skip_array_ws();
            arr.push_back(value(key));
            skip_array_ws();
            if (eof()) throw ConfigError(key, "unterminated array");
            if (peek() == ',') {
                ++i_;
                skip_array_ws();
                if (!eof() && peek() == ']') {
                    ++i_;
                    return arr;
                }
                continue;
            }
            expect(']', key);
            return arr;
        }
    }

    Json number_value(const std::string& key) {
        const std::size_t start = i_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' ||
                          peek() == '+' || peek() == '-' || peek() == '_'))
            ++i_;
        std::string tok = s_.substr(start, i_ - start);
        tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
        if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
        if (tok == "-inf") return -std::numeric_limits<double>::infinity();
        if (tok.empty()) throw ConfigError(key, "expected a value (line " + line() + ")");
        const bool is_int = tok.find_first_of(".eE") == std::string::npos;
        try {
            std::size_t used = 0;
            if (is_int) {
                const long long v = std::stoll(tok, &used);
                if (used == tok.size()) return v;
            } else {
                const double v = std::stod(tok, &used);
                if (used == tok.size()) return v;
            }
        } catch (const std::exception&) {
        }
        throw ConfigError(key, "cannot parse '" + tok + "' as a number");
    }

    const std::string& s_;
    std::size_t i_ = 0;
};

}  // namespace

Json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

Json parse_config_text(const std::string& text) {
    const auto pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text[pos] == '{') {
        try {
            return Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError("(json)", e.what());
        }
    }
    return parse_toml(text);
}

Json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(file)", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ------------------------------------------------------------ resolution

namespace {

// Typed access to one config section; remembers which keys were consumed so
// leftovers can be reported.
class Section {
public:
    Section(const Json& root, std::string name) : name_(std::move(name)) {
        if (root.contains(name_)) {
            if (!root[name_].is_object()) throw ConfigError(name_, "must be a section");
            obj_ = &root[name_];
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_ && obj_->contains(key);
    }
    std::string full(const std::string& key) const { return name_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_number()) throw ConfigError(full(key), "must be a number");
        const double d = v.get<double>();
        if (std::isnan(d)) throw ConfigError(full(key), "must not be NaN");
        return d;
    }
    double finite(const std::string& key, double fallback) {
        const double d = number(key, fallback);
        if (!std::isfinite(d)) throw ConfigError(full(key), "must be finite");
        return d;
    }
    double positive(const std::string& key, double fallback) {
        const double d = finite(key, fallback);
        if (!(d > 0.0)) throw ConfigError(full(key), "must be positive");
        return d;
    }
    double nonneg(const std::string& key, double fallback) {
        const double d = finite(key, fallback);
        if (!(d >= 0.0)) throw ConfigError(full(key), "must be non-negative");
        return d;
    }
    long long integer(const std::string& key, long long fallback, long long min_value) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_number_integer()) throw ConfigError(full(key), "must be an integer");
        const long long i = v.get<long long>();
        if (i < min_value)
            throw ConfigError(full(key), "must be >= " + std::to_string(min_value));
        return i;
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_boolean()) throw ConfigError(full(key), "must be true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_string()) throw ConfigError(full(key), "must be a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_array()) throw ConfigError(full(key), "must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(full(key), "must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
        if (!has(key)) return fallback;
        const Json& v = (*obj_)[key];
        if (!v.is_array()) throw ConfigError(full(key), "must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(full(key), "must be an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }
    Vector vector(const std::string& key, const Vector& fallback) {
        if (!has(key)) return fallback;
        const auto v = numbers(key, {});
        return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
    Matrix matrix(const std::string& key) {
        if (!has(key)) return Matrix();
        const Json& v = (*obj_)[key];
        if (!v.is_array() || v.empty())
            throw ConfigError(full(key), "must be a non-empty array of rows");
        const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
        if (cols == 0) throw ConfigError(full(key), "must be a non-empty array of rows");
        Matrix m(static_cast<Index>(v.size()), static_cast<Index>(cols));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_array() || v[i].size() != cols)
                throw ConfigError(full(key), "rows must have equal length");
            for (std::size_t j = 0; j < cols; ++j) {
                if (!v[i][j].is_number()) throw ConfigError(full(key), "entries must be numbers");
                m(static_cast<Index>(i), static_cast<Index>(j)) = v[i][j].get<double>();
            }
        }
        return m;
    }

    void reject_unknown() const {
        if (!obj_) return;
        for (const auto& [k, _] : obj_->items())
            if (!seen_.count(k)) throw ConfigError(full(k), "unknown key");
    }

private:
    std::string name_;
    const Json* obj_ = nullptr;
    std::set<std::string> seen_;
};

Json vec_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json mat_json(const Matrix& m) {
    Json a = Json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

ScenarioKind parse_kind(const std::string& s) {
    if (s == "setpoint_noload") return ScenarioKind::setpoint_noload;
    if (s == "setpoint_load") return ScenarioKind::setpoint_load;
    if (s == "payload_sweep") return ScenarioKind::payload_sweep;
    if (s == "long_trajectory") return ScenarioKind::long_trajectory;
    throw ConfigError("scenario.kind",
                      "expected setpoint_noload, setpoint_load, payload_sweep or long_trajectory, "
                      "got '" + s + "'");
}

ControlMode parse_mode(const std::string& s, const std::string& key) {
    if (s == "deepc" || s == "regularized") return ControlMode::regularized;
    if (s == "vdeepc" || s == "velocity") return ControlMode::velocity;
    throw ConfigError(key, "unknown controller mode '" + s + "'");
}

}  // namespace

std::unique_ptr<Plant> PlantSpec::make(double payload_g, std::uint64_t noise_seed,
                                       bool closed_loop) const {
    if (type == "softarm") {
        SoftArmParams p = arm;
        p.payload_g = payload_g;
        p.seed = noise_seed;
        return std::make_unique<SoftArmPlant>(p);
    }
    auto plant = std::make_unique<LtiPlant>(A, B, C, D);
    plant->set_sample_period(sample_period);
    if (x0.size()) plant->set_initial_state(x0);
    if (closed_loop && output_disturbance.size())
        plant->set_output_disturbance(StepSchedule::constant(output_disturbance));
    if (noise_std.size()) plant->set_noise(noise_std, noise_seed);
    return plant;
}

Index PlantSpec::input_dim() const { return type == "softarm" ? 1 : B.cols(); }
Index PlantSpec::output_dim() const { return type == "softarm" ? 2 : C.rows(); }

DeePCParams ControllerSpec::params(Index m, Index p) const {
    DeePCParams d = DeePCParams::with_scalar_weights(m, p, t_ini, horizon, q, r, lambda_g,
                                                     lambda_y);
    d.u_bounds = Bounds::uniform(m, u_min, u_max);
    d.y_bounds = Bounds::unbounded(p);
    if (y_lower.size()) d.y_bounds.lower = y_lower;
    if (y_upper.size()) d.y_bounds.upper = y_upper;
    return d;
}

Scenario scenario_from_json(const Json& root) {
    if (!root.is_object()) throw ConfigError("(root)", "config must be a table");
    static const std::set<std::string> sections{"scenario", "plant",     "excitation",
                                                "controller", "reference", "payload",
                                                "metrics",  "data",      "solver"};
    for (const auto& [k, _] : root.items())
        if (!sections.count(k)) throw ConfigError(k, "unknown section");
    if (!root.contains("scenario")) throw ConfigError("scenario", "missing [scenario] section");

    Scenario sc;
    Section s(root, "scenario");
    sc.name = s.string("name", "");
    if (sc.name.empty()) throw ConfigError("scenario.name", "required");
    sc.kind = parse_kind(s.string("kind", sc.name));
    sc.seed = static_cast<std::uint64_t>(s.integer("seed", 1, 0));
    const bool sweep = sc.kind == ScenarioKind::payload_sweep;
    const bool longrun = sc.kind == ScenarioKind::long_trajectory;
    sc.repetitions = static_cast<int>(s.integer("repetitions", longrun ? 1 : 3, 1));
    sc.t_end = s.integer("t_end", longrun ? 749 : 300, 1);
    if (s.has("modes")) {
        sc.modes.clear();
        for (const auto& m : s.strings("modes", {})) {
            const ControlMode mode = parse_mode(m, "scenario.modes");
            if (std::find(sc.modes.begin(), sc.modes.end(), mode) == sc.modes.end())
                sc.modes.push_back(mode);
        }
        if (sc.modes.empty()) throw ConfigError("scenario.modes", "must not be empty");
    }
    sc.output_dir = s.string("output_dir", "");
    s.reject_unknown();

    // plant
    Section pl(root, "plant");
    sc.plant.type = pl.string("type", "softarm");
    if (sc.plant.type == "softarm") {
        auto& a = sc.plant.arm;
        a.length_mm = pl.positive("length_mm", a.length_mm);
        a.inertia = pl.positive("inertia", a.inertia);
        a.k1 = pl.nonneg("k1", a.k1);
        a.k3 = pl.nonneg("k3", a.k3);
        a.damping = pl.nonneg("damping", a.damping);
        a.input_gain = pl.finite("input_gain", a.input_gain);
        a.mount_angle = pl.finite("mount_angle", a.mount_angle);
        a.gravity = pl.nonneg("gravity", a.gravity);
        a.mount_x_mm = pl.finite("mount_x_mm", a.mount_x_mm);
        a.mount_z_mm = pl.finite("mount_z_mm", a.mount_z_mm);
        a.u_min = pl.finite("u_min", a.u_min);
        a.u_max = pl.finite("u_max", a.u_max);
        if (a.u_min > a.u_max) throw ConfigError("plant.u_min", "exceeds plant.u_max");
        a.sample_period = pl.positive("sample_period", a.sample_period);
        a.substeps = static_cast<int>(pl.integer("substeps", a.substeps, 1));
        a.noise_std_mm = pl.nonneg("noise_std_mm", 0.05);
        sc.plant.sample_period = a.sample_period;
    } else if (sc.plant.type == "lti") {
        sc.plant.A = pl.matrix("A");
        sc.plant.B = pl.matrix("B");
        sc.plant.C = pl.matrix("C");
        sc.plant.D = pl.matrix("D");
        if (!sc.plant.A.size()) throw ConfigError("plant.A", "required for an lti plant");
        if (!sc.plant.B.size()) throw ConfigError("plant.B", "required for an lti plant");
        if (!sc.plant.C.size()) throw ConfigError("plant.C", "required for an lti plant");
        const Index n = sc.plant.A.rows();
        if (sc.plant.A.cols() != n) throw ConfigError("plant.A", "must be square");
        if (sc.plant.B.rows() != n) throw ConfigError("plant.B", "row count must match A");
        if (sc.plant.C.cols() != n) throw ConfigError("plant.C", "column count must match A");
        if (sc.plant.D.size() &&
            (sc.plant.D.rows() != sc.plant.C.rows() || sc.plant.D.cols() != sc.plant.B.cols()))
            throw ConfigError("plant.D", "must be p x m");
        sc.plant.x0 = pl.vector("x0", Vector());
        if (sc.plant.x0.size() && sc.plant.x0.size() != n)
            throw ConfigError("plant.x0", "must have n entries");
        sc.plant.output_disturbance = pl.vector("output_disturbance", Vector());
        if (sc.plant.output_disturbance.size() &&
            sc.plant.output_disturbance.size() != sc.plant.C.rows())
            throw ConfigError("plant.output_disturbance", "must have p entries");
        sc.plant.noise_std = pl.vector("noise_std", Vector());
        if (sc.plant.noise_std.size() && sc.plant.noise_std.size() != sc.plant.C.rows())
            throw ConfigError("plant.noise_std", "must have p entries");
        sc.plant.sample_period = pl.positive("sample_period", 0.1);
    } else {
        throw ConfigError("plant.type", "expected softarm or lti, got '" + sc.plant.type + "'");
    }
    pl.reject_unknown();
    const Index m = sc.plant.input_dim();
    const Index p = sc.plant.output_dim();
    const bool arm = sc.plant.type == "softarm";

    // excitation / data
    Section ex(root, "excitation");
    sc.excitation.length = ex.integer("length", 601, 1);
    sc.excitation.hold = ex.integer("hold", 5, 1);
    sc.excitation.low = ex.finite("low", arm ? sc.plant.arm.u_min : -1.0);
    sc.excitation.high = ex.finite("high", arm ? sc.plant.arm.u_max : 1.0);
    if (sc.excitation.low >= sc.excitation.high)
        throw ConfigError("excitation.low", "must be below excitation.high");
    sc.excitation.seed = static_cast<std::uint64_t>(ex.integer("seed", 1000 + sc.seed, 0));
    sc.excitation.channels = m;
    sc.datasets = ex.integer("datasets", 4, 1);
    ex.reject_unknown();

    Section da(root, "data");
    sc.dataset_stems = da.strings("stems", {});
    da.reject_unknown();

    // controller
    Section co(root, "controller");
    auto& c = sc.controller;
    c.t_ini = co.integer("t_ini", 20, 2);
    c.horizon = co.integer("horizon", 20, 1);
    c.q = co.positive("q", 1.0);
    c.r = co.positive("r", 1e-6);
    c.lambda_g = co.nonneg("lambda_g", 1e3);
    c.lambda_y = co.nonneg("lambda_y", 1e5);
    c.u_min = co.number("u_min", arm ? sc.plant.arm.u_min : -1e6);
    c.u_max = co.number("u_max", arm ? sc.plant.arm.u_max : 1e6);
    if (!(c.u_min <= c.u_max)) throw ConfigError("controller.u_min", "exceeds controller.u_max");
    const Vector ws_lo = arm ? Vector((Vector(2) << 30.0, 240.0).finished()) : Vector();
    const Vector ws_hi = arm ? Vector((Vector(2) << 160.0, 350.0).finished()) : Vector();
    c.y_lower = co.vector("y_lower", ws_lo);
    c.y_upper = co.vector("y_upper", ws_hi);
    if (c.y_lower.size() && c.y_lower.size() != p)
        throw ConfigError("controller.y_lower", "must have " + std::to_string(p) + " entries");
    if (c.y_upper.size() && c.y_upper.size() != p)
        throw ConfigError("controller.y_upper", "must have " + std::to_string(p) + " entries");
    c.reduce = co.boolean("reduce", true);
    c.svd_rank = co.integer("svd_rank", 400, 0);
    co.reject_unknown();
    if (c.t_ini + c.horizon > sc.excitation.length)
        throw ConfigError("controller.horizon", "T_ini + N exceeds the excitation length");

    Section so(root, "solver");
    c.qp.eps_abs = so.positive("eps_abs", c.qp.eps_abs);
    c.qp.eps_rel = so.positive("eps_rel", c.qp.eps_rel);
    c.qp.max_iter = static_cast<int>(so.integer("max_iter", c.qp.max_iter, 1));
    c.qp.rho = so.positive("rho", c.qp.rho);
    c.qp.polish = so.boolean("polish", c.qp.polish);
    so.reject_unknown();

    // reference
    Section re(root, "reference");
    std::vector<Vector> setpoints;
    if (re.has("setpoints")) {
        const Matrix sp = re.matrix("setpoints");
        if (sp.cols() != p)
            throw ConfigError("reference.setpoints", "each setpoint needs " + std::to_string(p) +
                                                         " entries");
        for (Index i = 0; i < sp.rows(); ++i) setpoints.push_back(sp.row(i).transpose());
        if (re.has("pressures"))
            throw ConfigError("reference.pressures", "give either setpoints or pressures");
    } else {
        if (!arm && !re.has("pressures"))
            throw ConfigError("reference.setpoints", "required for an lti plant");
        if (!arm) throw ConfigError("reference.pressures", "only meaningful for the soft arm");
        const std::vector<double> def =
            longrun ? std::vector<double>{20, 45, 65, 30, 55} : std::vector<double>{40};
        const SoftArmPlant nominal(sc.plant.arm);
        for (double u : re.numbers("pressures", def)) {
            if (u < sc.plant.arm.u_min || u > sc.plant.arm.u_max)
                throw ConfigError("reference.pressures", "outside the actuator range");
            setpoints.push_back(nominal.equilibrium_tip(u));
        }
    }
    if (setpoints.empty()) throw ConfigError("reference.setpoints", "must not be empty");
    std::vector<double> starts_def;
    const Index seg = (sc.t_end + 1) / static_cast<Index>(setpoints.size());
    for (std::size_t i = 0; i < setpoints.size(); ++i)
        starts_def.push_back(static_cast<double>(i * seg));
    const auto starts = re.numbers("starts", starts_def);
    if (starts.size() != setpoints.size())
        throw ConfigError("reference.starts", "needs one entry per setpoint");
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (starts[i] < 0 || starts[i] != std::floor(starts[i]))
            throw ConfigError("reference.starts", "must be non-negative integers");
        sc.reference.segments.emplace_back(static_cast<Index>(starts[i]), setpoints[i]);
    }
    re.reject_unknown();
    try {
        const Vector* lo = c.y_lower.size() ? &c.y_lower : nullptr;
        const Vector* hi = c.y_upper.size() ? &c.y_upper : nullptr;
        sc.reference.validate(lo, hi);
    } catch (const Error& e) {
        throw ConfigError("reference.setpoints", e.what());
    }

    // payloads
    Section pa(root, "payload");
    std::vector<double> def_payloads{0.0};
    if (sc.kind == ScenarioKind::setpoint_load) def_payloads = {178.4};
    if (sweep) {
        def_payloads = {0.0};
        def_payloads.insert(def_payloads.end(), standard_payloads().begin(), standard_payloads().end());
    }
    if (longrun) def_payloads = {0.0, 178.0};
    sc.payloads_g = pa.numbers("masses_g", def_payloads);
    if (sc.payloads_g.empty()) throw ConfigError("payload.masses_g", "must not be empty");
    for (double w : sc.payloads_g)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ConfigError("payload.masses_g", "masses must be finite and non-negative");
    if (!arm && (sc.payloads_g.size() != 1 || sc.payloads_g[0] != 0.0))
        throw ConfigError("payload.masses_g", "payloads need the soft-arm plant");
    pa.reject_unknown();

    Section me(root, "metrics");
    sc.steady_fraction = me.positive("steady_fraction", 0.5);
    if (sc.steady_fraction > 1.0)
        throw ConfigError("metrics.steady_fraction", "must lie in (0, 1]");
    me.reject_unknown();

    return sc;
}

Json Scenario::to_json() const {
    Json j;
    Json modes_j = Json::array();
    for (ControlMode mo : modes) modes_j.push_back(std::string(to_string(mo)));
    j["scenario"] = {{"name", name},
                     {"kind", std::string(to_string(kind))},
                     {"seed", seed},
                     {"repetitions", repetitions},
                     {"t_end", t_end},
                     {"modes", modes_j}};
    if (!output_dir.empty()) j["scenario"]["output_dir"] = output_dir;

    Json pl;
    pl["type"] = plant.type;
    if (plant.type == "softarm") {
        const auto& a = plant.arm;
        pl["length_mm"] = a.length_mm;
        pl["inertia"] = a.inertia;
        pl["k1"] = a.k1;
        pl["k3"] = a.k3;
        pl["damping"] = a.damping;
        pl["input_gain"] = a.input_gain;
        pl["mount_angle"] = a.mount_angle;
        pl["gravity"] = a.gravity;
        pl["mount_x_mm"] = a.mount_x_mm;
        pl["mount_z_mm"] = a.mount_z_mm;
        pl["u_min"] = a.u_min;
        pl["u_max"] = a.u_max;
        pl["sample_period"] = a.sample_period;
        pl["substeps"] = a.substeps;
        pl["noise_std_mm"] = a.noise_std_mm;
    } else {
        pl["A"] = mat_json(plant.A);
        pl["B"] = mat_json(plant.B);
        pl["C"] = mat_json(plant.C);
        if (plant.D.size()) pl["D"] = mat_json(plant.D);
        if (plant.x0.size()) pl["x0"] = vec_json(plant.x0);
        if (plant.output_disturbance.size())
            pl["output_disturbance"] = vec_json(plant.output_disturbance);
        if (plant.noise_std.size()) pl["noise_std"] = vec_json(plant.noise_std);
        pl["sample_period"] = plant.sample_period;
    }
    j["plant"] = pl;

    j["excitation"] = {{"length", excitation.length}, {"hold", excitation.hold},
                       {"low", excitation.low},       {"high", excitation.high},
                       {"seed", excitation.seed},     {"datasets", datasets}};
    if (!dataset_stems.empty()) j["data"] = {{"stems", dataset_stems}};

    const auto& c = controller;
    Json co{{"t_ini", c.t_ini},       {"horizon", c.horizon},   {"q", c.q},
            {"r", c.r},               {"lambda_g", c.lambda_g}, {"lambda_y", c.lambda_y},
            {"u_min", c.u_min},       {"u_max", c.u_max},       {"reduce", c.reduce},
            {"svd_rank", c.svd_rank}};
    if (c.y_lower.size()) co["y_lower"] = vec_json(c.y_lower);
    if (c.y_upper.size()) co["y_upper"] = vec_json(c.y_upper);
    j["controller"] = co;
    j["solver"] = {{"eps_abs", c.qp.eps_abs},
                   {"eps_rel", c.qp.eps_rel},
                   {"max_iter", c.qp.max_iter},
                   {"rho", c.qp.rho},
                   {"polish", c.qp.polish}};

    Json sp = Json::array();
    Json st = Json::array();
    for (const auto& [start, v] : reference.segments) {
        sp.push_back(vec_json(v));
        st.push_back(start);
    }
    j["reference"] = {{"setpoints", sp}, {"starts", st}};
    j["payload"] = {{"masses_g", payloads_g}};
    j["metrics"] = {{"steady_fraction", steady_fraction}};
    return j;
}

}  // namespace deepc
