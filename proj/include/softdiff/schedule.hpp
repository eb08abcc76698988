#pragma once

#include "softdiff/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace softdiff {

struct ScheduleEntry {
  double t;
  double blur_std;
  double sigma;

  bool operator==(const ScheduleEntry&) const = default;
};

/// Ordered corruption levels over t in [0, 1]. `blur_std` is the operator
/// family's level parameter (blur std, or fade level for fade operators).
struct Schedule {
  std::vector<ScheduleEntry> entries;
  std::string dataset = "unknown";
  std::string metric = "none";
  double epsilon = 0.0;
  std::string config_hash;

  /// Throws RangeError unless t is strictly increasing from 0 to 1 and both
  /// blur_std and sigma are non-decreasing and non-negative.
  void validate() const;

  /// Piecewise-linear interpolation of the level parameter.
  double level_at(double t) const;
  double sigma_at(double t) const;

  bool operator==(const Schedule&) const = default;
};

std::string schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const std::string& text);
void save_schedule(const std::filesystem::path& path, const Schedule& s);
Schedule load_schedule(const std::filesystem::path& path);

}  // namespace softdiff
