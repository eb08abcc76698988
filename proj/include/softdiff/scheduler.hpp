#pragma once

#include "softdiff/process.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace softdiff {

// ---- Distances between point clouds (columns are points) ----

/// Exact 1-D 2-Wasserstein distance between two sorted samples of any sizes.
double w2_sorted_1d(const std::vector<double>& a, const std::vector<double>& b);

/// `count` random unit directions in R^dim as columns. In one dimension the
/// single direction +1 is returned.
Matrix draw_projections(Eigen::Index dim, int count, RandomSource& rng);

/// Average over the given directions of the exact 1-D W2 between projections.
double sliced_w2(const Matrix& a, const Matrix& b, const Matrix& projections);

/// Sliced W2 with `num_projections` directions drawn from `rng`.
double empirical_distance(const Matrix& a, const Matrix& b, int num_projections, RandomSource& rng);

// ---- Scheduling graph ----

/// Candidate corruption levels and a corrupted point cloud for each. All
/// clouds share the same clean draws and noise (common random numbers).
struct CandidateGrid {
  Vector thetas;
  std::vector<Matrix> sample_sets;

  Eigen::Index size() const { return thetas.size(); }
};

CandidateGrid build_candidate_grid(const Matrix& data, const OperatorFamily& family, const Vector& thetas,
                                   double sigma, Eigen::Index points, RandomSource& rng);

/// Evenly spaced levels over the family's range.
Vector linear_thetas(const OperatorFamily& family, Eigen::Index count);

/// Symmetric matrix of pairwise sliced-W2 distances. Rows are computed in
/// parallel on `threads` workers (0 = hardware concurrency).
Matrix distance_matrix(const CandidateGrid& grid, int num_projections, RandomSource& rng, unsigned threads = 0);

/// Complete graph on the candidates; an edge exists when its distance is <= epsilon.
struct DistanceGraph {
  Matrix distances;
  double epsilon = std::numeric_limits<double>::infinity();

  Eigen::Index size() const { return distances.rows(); }
  bool has_edge(Eigen::Index i, Eigen::Index j) const { return i != j && distances(i, j) <= epsilon; }
  double weight(Eigen::Index i, Eigen::Index j) const;
};

/// Minimum-weight path from node 0 to the last node (Dijkstra; ties go to
/// the smaller predecessor index). Throws RangeError when no finite path exists.
std::vector<int> shortest_path(const DistanceGraph& graph);

double path_cost(const DistanceGraph& graph, const std::vector<int>& path);

struct Calibration {
  double epsilon = 0.0;
  std::vector<int> path;
  /// False when no epsilon gives exactly the target node count; the closest is returned.
  bool exact = false;
};

/// Bisection over the sorted distinct pairwise distances for a path with
/// `target_nodes` nodes.
Calibration calibrate_epsilon(const Matrix& distances, int target_nodes);

/// Path nodes placed uniformly on [ramp_end, 1] after an uncorrupted
/// denoising stage on [0, ramp_end].
Schedule schedule_from_path(const Vector& thetas, const std::vector<int>& path, const NoiseSchedule& noise);

// ---- MSE-matched baseline ----

/// Reference noise-only schedule sigma'(t).
using ReferenceSigma = std::function<double(double)>;

/// Geometric sigma_min (sigma_max / sigma_min)^t.
ReferenceSigma geometric_reference(double sigma_min, double sigma_max);

/// E ||x0 - (C x0 + sigma z)||^2, averaging over the data columns with the
/// noise term in closed form.
double corruption_mse(const Matrix& data, const LinearOperator& c, double sigma);

struct MatchedLevel {
  double level = 0.0;
  bool clamped = false;
};

/// Level at time t whose MSE ratio to the t = 1 corruption equals the
/// reference ratio sigma'(t)^2 / sigma'(1)^2.
MatchedLevel mse_matched_level(const Matrix& data, const OperatorFamily& family, const NoiseSchedule& noise,
                               const ReferenceSigma& reference, double t, double tolerance = 1e-12);

struct MatchedSchedule {
  Schedule schedule;
  std::vector<bool> clamped;
};

MatchedSchedule mse_matched_schedule(const ReferenceSigma& reference, const Matrix& data, const OperatorFamily& family,
                                     const NoiseSchedule& noise, int num_points);

std::string distances_to_csv(const Matrix& distances);

}  // namespace softdiff
