#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gvc/harness.hpp"

namespace gvc {

/// 17 significant digits, so the text parses back to the identical double.
std::string format_double(double v);

/// Trajectory columns: t, elements, theta, (s, t_acc, w), v, b1, b2, q1, q2,
/// slacks and |u|; governed runs add kappa, the virtual target and the
/// terminal-set flag. Headers carry units as `name[unit]`.
void write_csv(std::ostream& os, const std::vector<TrajectoryRecord>& log);
void write_csv(std::ostream& os, const GridStudyResult& grid);
void write_csv(std::ostream& os, const std::vector<C0Point>& sweep);
void write_csv(std::ostream& os, const GovernorComparison& cmp);

/// Writes to `path`; throws IoError naming the path on failure.
template <typename T>
void write_csv(const std::filesystem::path& path, const T& data);

std::vector<std::string> trajectory_columns(bool with_governor);

} // namespace gvc
