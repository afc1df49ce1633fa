#pragma once

#include "deepc/hankel.hpp"

#include <filesystem>
#include <iosfwd>

namespace deepc {

/// CSV layout: header `t,u1..um,y1..yp`, one sample per row, t in seconds.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
Trajectory read_trajectory_csv(std::istream& in, double sample_period);

/// Writes `<stem>.csv` plus the sidecar `<stem>.json` holding
/// {m, p, sample_period, label}.
void save_trajectory(const Trajectory& traj, const std::filesystem::path& stem);
Trajectory load_trajectory(const std::filesystem::path& stem);

}  // namespace deepc
