#include "softdiff/schedule.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace softdiff {

using nlohmann::json;

void Schedule::validate() const {
  if (entries.size() < 2) throw RangeError("schedule: needs at least two entries");
  if (entries.front().t != 0.0) throw RangeError("schedule: first entry must have t = 0");
  if (entries.back().t != 1.0) throw RangeError("schedule: last entry must have t = 1");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!std::isfinite(e.t) || !std::isfinite(e.blur_std) || !std::isfinite(e.sigma))
      throw RangeError("schedule: non-finite entry at index " + std::to_string(i));
    if (e.blur_std < 0.0 || e.sigma < 0.0)
      throw RangeError("schedule: negative parameter at index " + std::to_string(i));
    if (i == 0) continue;
    const auto& p = entries[i - 1];
    if (!(e.t > p.t)) throw RangeError("schedule: t not strictly increasing at index " + std::to_string(i));
    if (e.blur_std < p.blur_std)
      throw RangeError("schedule: blur_std decreases at index " + std::to_string(i));
    if (e.sigma < p.sigma) throw RangeError("schedule: sigma decreases at index " + std::to_string(i));
  }
}

namespace {

template <typename Field>
double interpolate(const std::vector<ScheduleEntry>& entries, double t, Field field) {
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("schedule: t = " + std::to_string(t) + " outside [0, 1]");
  auto hi = std::lower_bound(entries.begin(), entries.end(), t,
                             [](const ScheduleEntry& e, double v) { return e.t < v; });
  if (hi == entries.end()) return field(entries.back());
  if (hi->t == t || hi == entries.begin()) return field(*hi);
  auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return (1.0 - w) * field(*lo) + w * field(*hi);
}

}  // namespace

double Schedule::level_at(double t) const {
  return interpolate(entries, t, [](const ScheduleEntry& e) { return e.blur_std; });
}

double Schedule::sigma_at(double t) const {
  return interpolate(entries, t, [](const ScheduleEntry& e) { return e.sigma; });
}

std::string schedule_to_json(const Schedule& s) {
  json j;
  j["dataset"] = s.dataset;
  j["metric"] = s.metric;
  j["epsilon"] = s.epsilon;
  if (!s.config_hash.empty()) j["config_hash"] = s.config_hash;
  j["entries"] = json::array();
  for (const auto& e : s.entries) j["entries"].push_back({{"t", e.t}, {"blur_std", e.blur_std}, {"sigma", e.sigma}});
  return j.dump(2) + "\n";
}

Schedule schedule_from_json(const std::string& text) {
  Schedule s;
  try {
    const json j = json::parse(text);
    s.dataset = j.at("dataset").get<std::string>();
    s.metric = j.at("metric").get<std::string>();
    s.epsilon = j.at("epsilon").is_null() ? INFINITY : j.at("epsilon").get<double>();
    if (j.contains("config_hash")) s.config_hash = j["config_hash"].get<std::string>();
    for (const auto& e : j.at("entries"))
      s.entries.push_back({e.at("t").get<double>(), e.at("blur_std").get<double>(), e.at("sigma").get<double>()});
  } catch (const json::exception& ex) {
    throw Error(std::string("schedule: malformed JSON: ") + ex.what());
  }
  s.validate();
  return s;
}

void save_schedule(const std::filesystem::path& path, const Schedule& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("schedule: cannot open " + path.string());
  out << schedule_to_json(s);
}

Schedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("schedule: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return schedule_from_json(ss.str());
}

}  // namespace softdiff
