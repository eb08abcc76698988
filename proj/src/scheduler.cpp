#include "softdiff/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

namespace softdiff {

double w2_sorted_1d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw Error("w2: empty sample");
  if (a.size() == b.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
  }
  // Integrate (F_a^{-1}(u) - F_b^{-1}(u))^2 over the merged quantile breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next = std::min((i + 1) / na, (j + 1) / nb);
    const double d = a[i] - b[j];
    acc += (next - u) * d * d;
    u = next;
    if ((i + 1) / na <= next) ++i;
    if ((j + 1) / nb <= next) ++j;
  }
  return std::sqrt(acc);
}

Matrix draw_projections(Eigen::Index dim, int count, RandomSource& rng) {
  if (count < 1) throw RangeError("projections: need at least one direction");
  if (dim == 1) return Matrix::Ones(1, 1);
  Matrix p(dim, count);
  for (int k = 0; k < count; ++k) {
    Vector v;
    do {
      v = rng.normal_vector(dim);
    } while (v.norm() < 1e-12);
    p.col(k) = v.normalized();
  }
  return p;
}

namespace {

std::vector<double> sorted_projection(const Matrix& cloud, const Vector& direction) {
  const Vector proj = cloud.transpose() * direction;
  std::vector<double> v(proj.data(), proj.data() + proj.size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double sliced_w2(const Matrix& a, const Matrix& b, const Matrix& projections) {
  if (a.cols() == 0 || b.cols() == 0) throw Error("sliced_w2: empty point cloud");
  check_dim("sliced_w2 clouds", a.rows(), b.rows());
  check_dim("sliced_w2 projections", a.rows(), projections.rows());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < projections.cols(); ++k)
    acc += w2_sorted_1d(sorted_projection(a, projections.col(k)), sorted_projection(b, projections.col(k)));
  return acc / static_cast<double>(projections.cols());
}

double empirical_distance(const Matrix& a, const Matrix& b, int num_projections, RandomSource& rng) {
  check_dim("empirical_distance", a.rows(), b.rows());
  return sliced_w2(a, b, draw_projections(a.rows(), num_projections, rng));
}

Vector linear_thetas(const OperatorFamily& family, Eigen::Index count) {
  if (count < 2) throw RangeError("candidate grid: need at least two levels");
  return Vector::LinSpaced(count, family.level_min, family.level_max);
}

CandidateGrid build_candidate_grid(const Matrix& data, const OperatorFamily& family, const Vector& thetas,
                                   double sigma, Eigen::Index points, RandomSource& rng) {
  if (data.cols() == 0) throw Error("candidate grid: empty dataset");
  check_dim("candidate grid", family.dim(), data.rows());
  Matrix clean(data.rows(), points);
  for (Eigen::Index j = 0; j < points; ++j)
    clean.col(j) = data.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.cols()))));
  const Matrix noise = sigma * rng.normal_matrix(data.rows(), points);
  CandidateGrid grid{thetas, {}};
  for (Eigen::Index i = 0; i < thetas.size(); ++i)
    grid.sample_sets.push_back(family.make(thetas[i]).apply(clean) + noise);
  return grid;
}

Matrix distance_matrix(const CandidateGrid& grid, int num_projections, RandomSource& rng, unsigned threads) {
  const auto n = grid.size();
  if (n == 0) return {};
  const Matrix proj = draw_projections(grid.sample_sets.front().rows(), num_projections, rng);

  // Sort every projected cloud once; each pair is then a linear scan.
  std::vector<std::vector<std::vector<double>>> sorted(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < proj.cols(); ++k) sorted[i].push_back(sorted_projection(grid.sample_sets[i], proj.col(k)));

  Matrix d = Matrix::Zero(n, n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  auto work = [&](unsigned worker) {
    for (Eigen::Index i = worker; i < n; i += threads)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < proj.cols(); ++k) acc += w2_sorted_1d(sorted[i][k], sorted[j][k]);
        d(i, j) = acc / static_cast<double>(proj.cols());
      }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  for (auto& th : pool) th.join();
  d.triangularView<Eigen::StrictlyLower>() = d.transpose();
  return d;
}

double DistanceGraph::weight(Eigen::Index i, Eigen::Index j) const {
  if (i == j) return 0.0;
  return has_edge(i, j) ? distances(i, j) : std::numeric_limits<double>::infinity();
}

std::vector<int> shortest_path(const DistanceGraph& graph) {
  const int n = static_cast<int>(graph.size());
  if (n == 0) throw RangeError("shortest_path: empty graph");
  if (graph.distances.cols() != n) throw DimensionError("shortest_path distances", n, graph.distances.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> prev(n, -1);
  std::vector<bool> done(n, false);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[0] = 0.0;
  queue.push({0.0, 0});
  while (!queue.empty()) {
    const auto [du, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    for (int v = 0; v < n; ++v) {
      if (done[v] || !graph.has_edge(u, v)) continue;
      const double nd = du + graph.distances(u, v);
      if (nd < dist[v] || (nd == dist[v] && u < prev[v])) {
        dist[v] = nd;
        prev[v] = u;
        queue.push({nd, v});
      }
    }
  }
  if (!std::isfinite(dist[n - 1]))
    throw RangeError("shortest_path: no finite path from the first to the last candidate; increase epsilon (" +
                     std::to_string(graph.epsilon) + ")");
  std::vector<int> path;
  for (int v = n - 1; v != -1; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const DistanceGraph& graph, const std::vector<int>& path) {
  double cost = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) cost += graph.weight(path[k - 1], path[k]);
  return cost;
}

Calibration calibrate_epsilon(const Matrix& distances, int target_nodes) {
  const auto n = distances.rows();
  if (target_nodes < 2 || target_nodes > n)
    throw RangeError("calibrate_epsilon: target must lie in [2, " + std::to_string(n) + "]");
  std::set<double> unique;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) unique.insert(distances(i, j));
  const std::vector<double> eps(unique.begin(), unique.end());

  auto path_for = [&](std::size_t idx) -> std::vector<int> {
    try {
      return shortest_path(DistanceGraph{distances, eps[idx]});
    } catch (const RangeError&) {
      return {};
    }
  };

  // Smallest threshold with any path; feasibility is monotone in epsilon.
  std::size_t lo = 0, hi = eps.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (path_for(mid).empty()) lo = mid + 1;
    else hi = mid;
  }

  Calibration best;
  best.epsilon = eps[lo];
  best.path = path_for(lo);
  auto consider = [&](std::size_t idx, const std::vector<int>& path) {
    const auto gap = std::abs(static_cast<long>(path.size()) - target_nodes);
    const auto best_gap = std::abs(static_cast<long>(best.path.size()) - target_nodes);
    if (gap < best_gap) {
      best.epsilon = eps[idx];
      best.path = path;
    }
  };

  // Node count shrinks as epsilon grows; bisect for the first threshold
  // whose path is no longer than the target.
  std::size_t a = lo, b = eps.size() - 1;
  while (a < b) {
    const std::size_t mid = (a + b) / 2;
    const auto path = path_for(mid);
    consider(mid, path);
    if (static_cast<int>(path.size()) > target_nodes) a = mid + 1;
    else b = mid;
  }
  consider(a, path_for(a));
  if (a > lo) consider(a - 1, path_for(a - 1));
  best.exact = static_cast<int>(best.path.size()) == target_nodes;
  return best;
}

Schedule schedule_from_path(const Vector& thetas, const std::vector<int>& path, const NoiseSchedule& noise) {
  if (path.size() < 2) throw RangeError("schedule_from_path: path needs at least two nodes");
  Schedule s;
  s.entries.push_back({0.0, thetas[path.front()], 0.0});
  const auto k = path.size();
  for (std::size_t i = 0; i < k; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(k - 1);
    const double t = i + 1 == k ? 1.0 : noise.ramp_end + (1.0 - noise.ramp_end) * u;
    if (t <= s.entries.back().t) continue;
    s.entries.push_back({t, thetas[path[i]], 0.0});
  }
  return with_noise(std::move(s), noise);
}

ReferenceSigma geometric_reference(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) throw RangeError("reference: need 0 < sigma_min <= sigma_max");
  return [=](double t) { return sigma_min * std::pow(sigma_max / sigma_min, t); };
}

double corruption_mse(const Matrix& data, const LinearOperator& c, double sigma) {
  if (data.cols() == 0) throw Error("corruption_mse: empty dataset");
  const Matrix residual = data - c.apply(data);
  return residual.colwise().squaredNorm().mean() + static_cast<double>(data.rows()) * sigma * sigma;
}

MatchedLevel mse_matched_level(const Matrix& data, const OperatorFamily& family, const NoiseSchedule& noise,
                               const ReferenceSigma& reference, double t, double tolerance) {
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("mse_matched_level: t outside [0, 1]");
  const double ref1 = reference(1.0);
  const double ref_t = reference(t);
  const double target = (ref_t * ref_t) / (ref1 * ref1);
  const double d1 = corruption_mse(data, family.make(family.level_max), noise.at(1.0));
  const double sigma = noise.at(t);
  auto ratio = [&](double level) { return corruption_mse(data, family.make(level), sigma) / d1; };

  double lo = family.level_min, hi = family.level_max;
  if (target <= ratio(lo)) return {lo, target < ratio(lo)};
  if (target >= ratio(hi)) return {hi, target > ratio(hi)};
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ratio(mid) < target) lo = mid;
    else hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

MatchedSchedule mse_matched_schedule(const ReferenceSigma& reference, const Matrix& data, const OperatorFamily& family,
                                     const NoiseSchedule& noise, int num_points) {
  if (num_points < 2) throw RangeError("mse_matched_schedule: need at least two points");
  for (int k = 1; k < num_points; ++k) {
    const double a = reference(static_cast<double>(k - 1) / (num_points - 1));
    const double b = reference(static_cast<double>(k) / (num_points - 1));
    if (b < a) throw RangeError("mse_matched_schedule: reference sigma must be non-decreasing");
  }
  MatchedSchedule out;
  out.schedule.metric = "mse-matched";
  double running = family.level_min;
  for (int k = 0; k < num_points; ++k) {
    const double t = k + 1 == num_points ? 1.0 : static_cast<double>(k) / (num_points - 1);
    auto m = mse_matched_level(data, family, noise, reference, t);
    if (m.level < running) {
      m.level = running;
      m.clamped = true;
    }
    running = m.level;
    out.schedule.entries.push_back({t, m.level, 0.0});
    out.clamped.push_back(m.clamped);
  }
  out.schedule = with_noise(std::move(out.schedule), noise);
  return out;
}

std::string distances_to_csv(const Matrix& distances) {
  std::ostringstream out;
  out << "i,j,distance\n";
  char buf[96];
  for (Eigen::Index i = 0; i < distances.rows(); ++i)
    for (Eigen::Index j = 0; j < distances.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g\n", static_cast<long>(i), static_cast<long>(j), distances(i, j));
      out << buf;
    }
  return out.str();
}

}  // namespace softdiff
