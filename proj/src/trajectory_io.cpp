#include "deepc/trajectory_io.hpp"

#include "deepc/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace deepc {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
    std::filesystem::path p = stem;
    p += ext;
    return p;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    traj.validate();
    out << "t";
    for (Index i = 0; i < traj.input_dim(); ++i) out << ",u" << i + 1;
    for (Index i = 0; i < traj.output_dim(); ++i) out << ",y" << i + 1;
    out << '\n' << std::setprecision(17);
    for (Index k = 0; k < traj.length(); ++k) {
        out << static_cast<double>(k) * traj.sample_period;
        for (Index i = 0; i < traj.input_dim(); ++i) out << ',' << traj.inputs(i, k);
        for (Index i = 0; i < traj.output_dim(); ++i) out << ',' << traj.outputs(i, k);
        out << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in, double sample_period) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty trajectory CSV");
    const auto header = split_csv(line);
    if (header.empty() || header.front() != "t")
        throw InvalidArgument("trajectory CSV header must start with 't'");
    Index m = 0, p = 0;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] == "u" + std::to_string(m + 1) && p == 0)
            ++m;
        else if (header[c] == "y" + std::to_string(p + 1))
            ++p;
        else
            throw InvalidArgument("unexpected CSV column '" + header[c] + "'");
    }
    if (m < 1 || p < 1) throw DimensionError("trajectory CSV needs at least one u and one y");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw DimensionError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(std::stod(c));
        rows.push_back(std::move(row));
    }
    Trajectory traj;
    traj.sample_period = sample_period;
    const Index T = static_cast<Index>(rows.size());
    traj.inputs.resize(m, T);
    traj.outputs.resize(p, T);
    for (Index k = 0; k < T; ++k) {
        for (Index i = 0; i < m; ++i) traj.inputs(i, k) = rows[k][1 + i];
        for (Index i = 0; i < p; ++i) traj.outputs(i, k) = rows[k][1 + m + i];
    }
    traj.validate();
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& stem) {
    std::ofstream csv(with_ext(stem, ".csv"));
    if (!csv) throw Error("cannot write " + with_ext(stem, ".csv").string());
    write_trajectory_csv(traj, csv);

    nlohmann::ordered_json meta;
    meta["m"] = traj.input_dim();
    meta["p"] = traj.output_dim();
    meta["sample_period"] = traj.sample_period;
    meta["label"] = traj.label;
    std::ofstream js(with_ext(stem, ".json"));
    if (!js) throw Error("cannot write " + with_ext(stem, ".json").string());
    js << meta.dump(2) << '\n';
}

Trajectory load_trajectory(const std::filesystem::path& stem) {
    std::ifstream js(with_ext(stem, ".json"));
    if (!js) throw Error("cannot read " + with_ext(stem, ".json").string());
    const auto meta = nlohmann::json::parse(js);
    std::ifstream csv(with_ext(stem, ".csv"));
    if (!csv) throw Error("cannot read " + with_ext(stem, ".csv").string());
    Trajectory traj = read_trajectory_csv(csv, meta.at("sample_period").get<double>());
    if (traj.input_dim() != meta.at("m").get<Index>() ||
        traj.output_dim() != meta.at("p").get<Index>())
        throw DimensionError("CSV columns disagree with sidecar (m, p)");
    traj.label = meta.value("label", std::string());
    return traj;
}

}  // namespace deepc
