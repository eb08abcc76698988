#include "doctest.h"
#include "oracles.hpp"

#include "softdiff/scheduler.hpp"

#include <algorithm>
#include <cmath>

using namespace softdiff;

TEST_CASE("exact 1-D W2 between sorted samples") {
  CHECK(w2_sorted_1d({0.0, 1.0}, {1.0, 2.0}) == 1.0);
  CHECK(w2_sorted_1d({0.0, 3.0}, {0.0, 3.0}) == 0.0);
  // Quantile functions differ by 1 on half of [0, 1].
  CHECK(w2_sorted_1d({0.0}, {0.0, 1.0}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(w2_sorted_1d({0.0, 1.0}, {0.0}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  // Thirds against halves: |difference| is 1 on [1/3, 2/3) and 0 elsewhere.
  CHECK(w2_sorted_1d({0.0, 1.0, 2.0}, {0.0, 2.0}) == doctest::Approx(std::sqrt(1.0 / 3)).epsilon(1e-14));
  CHECK_THROWS_AS(w2_sorted_1d({}, {1.0}), Error);
}

TEST_CASE("sliced distance identities") {
  RandomSource rng(1);
  const Matrix a = rng.normal_matrix(3, 300);
  CHECK(empirical_distance(a, a, 16, rng) == 0.0);

  Matrix line = rng.normal_matrix(1, 500);
  CHECK(empirical_distance(line, Matrix(line.array() + 0.75), 8, rng) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(draw_projections(1, 5, rng).size() == 1);

  const Matrix b = rng.normal_matrix(3, 300) * 1.5, c = rng.normal_matrix(3, 300).array() + 0.5;
  const Matrix proj = draw_projections(3, 32, rng);
  CHECK(proj.colwise().norm().minCoeff() == doctest::Approx(1.0));
  CHECK(sliced_w2(a, b, proj) == sliced_w2(b, a, proj));
  CHECK(sliced_w2(a, c, proj) <= sliced_w2(a, b, proj) + sliced_w2(b, c, proj) + 1e-12);
  CHECK(sliced_w2(b, c, proj) <= sliced_w2(b, a, proj) + sliced_w2(a, c, proj) + 1e-12);
}

TEST_CASE("centered 1-D Gaussians are |a - b| apart") {
  RandomSource rng(2);
  const Matrix x = 1.0 * rng.normal_matrix(1, 10000);
  const Matrix y = 2.5 * rng.normal_matrix(1, 10000);
  CHECK(std::abs(empirical_distance(x, y, 1, rng) - 1.5) <= 0.05 * 1.5);
}

TEST_CASE("estimated distances are symmetric and obey the triangle inequality across replicates") {
  RandomSource rng(3);
  const Matrix a = rng.normal_matrix(2, 400);
  const Matrix b = rng.normal_matrix(2, 400).array() + 0.4;
  const Matrix c = 2.0 * rng.normal_matrix(2, 400);
  std::vector<double> ab, ba, ac, bc;
  for (int r = 0; r < 30; ++r) {
    RandomSource s1 = rng.fork(r), s2 = rng.fork(r);
    ab.push_back(empirical_distance(a, b, 16, s1));
    ba.push_back(empirical_distance(b, a, 16, s2));
    ac.push_back(empirical_distance(a, c, 16, rng));
    bc.push_back(empirical_distance(b, c, 16, rng));
  }
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, std::sqrt(s / (v.size() - 1))};
  };
  CHECK(ab == ba);
  const auto [mab, sab] = mean_sd(ab);
  const auto [mac, sac] = mean_sd(ac);
  const auto [mbc, sbc] = mean_sd(bc);
  CHECK(mac <= mab + mbc + 3.0 * std::sqrt(sab * sab + sac * sac + sbc * sbc));
}

TEST_CASE("shortest path matches exhaustive enumeration on random graphs") {
  RandomSource rng(4);
  int checked = 0, disconnected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(11));
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.uniform(0.05, 1.0);
    const double eps = rng.uniform(0.3, 1.0);
    const auto want = oracles::brute_force_path(d, eps);
    const DistanceGraph g{d, eps};
    if (want.path.empty()) {
      CHECK_THROWS_AS(shortest_path(g), RangeError);
      ++disconnected;
      continue;
    }
    const auto got = shortest_path(g);
    CHECK(path_cost(g, got) == doctest::Approx(want.cost).epsilon(1e-12));
    CHECK(got == want.path);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("graph edge cases") {
  Matrix d(4, 4);
  d << 0, 1, 2, 3, 1, 0, 1, 2, 2, 1, 0, 1, 3, 2, 1, 0;
  d = d.cwiseSqrt();  // strictly subadditive
  CHECK(shortest_path(DistanceGraph{d}) == std::vector<int>{0, 3});
  CHECK(path_cost(DistanceGraph{d}, {0, 3}) == doctest::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(shortest_path(DistanceGraph{d, 0.5}), RangeError);
  CHECK(shortest_path(DistanceGraph{d, 1.0}) == std::vector<int>{0, 1, 2, 3});
  CHECK(shortest_path(DistanceGraph{Matrix::Zero(1, 1)}) == std::vector<int>{0});
}

TEST_CASE("five-node line graph against all monotone paths") {
  Matrix d(5, 5);
  d << 0.0, 1.0, 2.5, 2.9, 4.5,  //
      1.0, 0.0, 1.2, 2.0, 3.3,   //
      2.5, 1.2, 0.0, 0.9, 2.2,   //
      2.9, 2.0, 0.9, 0.0, 1.1,   //
      4.5, 3.3, 2.2, 1.1, 0.0;
  const double eps = 2.6;
  double best = INFINITY;
  std::vector<int> best_path;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> p{0};
    for (int k = 0; k < 3; ++k)
      if (mask & (1 << k)) p.push_back(k + 1);
    p.push_back(4);
    double cost = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) cost += d(p[k - 1], p[k]) <= eps ? d(p[k - 1], p[k]) : INFINITY;
    if (cost < best) best = cost, best_path = p;
  }
  CHECK(best_path == std::vector<int>{0, 1, 3, 4});
  CHECK(shortest_path(DistanceGraph{d, eps}) == best_path);
}

TEST_CASE("epsilon calibration") {
  const Matrix chain = oracles::chain_grid(9);
  const Calibration full = calibrate_epsilon(chain, 9);
  CHECK(full.exact);
  CHECK(full.path == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(full.epsilon >= 1.07);

  Matrix sub(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) sub(i, j) = std::sqrt(std::abs(i - j));
  const Calibration direct = calibrate_epsilon(sub, 2);
  CHECK(direct.exact);
  CHECK(direct.path == std::vector<int>{0, 5});
  CHECK(direct.epsilon == doctest::Approx(std::sqrt(5.0)));
  CHECK_THROWS_AS(calibrate_epsilon(sub, 1), RangeError);
  CHECK_THROWS_AS(calibrate_epsilon(sub, 7), RangeError);
}

TEST_CASE("path nodes are placed uniformly after the denoising stage") {
  Vector thetas = Vector::LinSpaced(10, 0.0, 4.5);
  const Schedule s = schedule_from_path(thetas, {0, 2, 5, 7, 9}, NoiseSchedule{});
  REQUIRE(s.entries.size() == 6);
  CHECK(s.entries[0].t == 0.0);
  CHECK(s.entries[0].blur_std == 0.0);
  CHECK(s.entries[1].t == doctest::Approx(0.2));
  CHECK(s.entries[1].blur_std == 0.0);
  CHECK(s.entries[2].t == doctest::Approx(0.4));
  CHECK(s.entries[3].blur_std == 2.5);
  CHECK(s.entries[5].t == 1.0);
  CHECK(s.entries[5].blur_std == 4.5);
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS(schedule_from_path(thetas, {0}, NoiseSchedule{}), RangeError);
}

TEST_CASE("graph schedule on a blur candidate grid is monotone and reloads") {
  RandomSource rng(5);
  const OperatorFamily fam = OperatorFamily::blur(4, 4, 3, 0.01, 3.0);
  const Matrix data = rng.normal_matrix(16, 200).cwiseAbs();
  const Vector th = linear_thetas(fam, 12);
  const CandidateGrid grid = build_candidate_grid(data, fam, th, 0.1, 300, rng);
  const Matrix d = distance_matrix(grid, 16, rng, 2);
  CHECK(d.isApprox(d.transpose()));
  CHECK(d.diagonal().isZero(0.0));
  const Calibration cal = calibrate_epsilon(d, 5);
  const Schedule s = schedule_from_path(th, cal.path, NoiseSchedule{});
  for (std::size_t k = 1; k < s.entries.size(); ++k) CHECK(s.entries[k].blur_std >= s.entries[k - 1].blur_std);
  CHECK(schedule_from_json(schedule_to_json(s)) == s);
  CHECK(distances_to_csv(d).rfind("i,j,distance\n0,0,0\n", 0) == 0);

  RandomSource other(5);
  other.normal_matrix(16, 200);
  const CandidateGrid again = build_candidate_grid(data, fam, th, 0.1, 300, other);
  CHECK(distance_matrix(again, 16, other, 1) == d);
}

TEST_CASE("MSE-matched level against closed-form inversion") {
  RandomSource rng(6);
  const Matrix data = (0.8 * rng.normal_matrix(1, 5000)).array() + 0.3;
  const double m2 = data.squaredNorm() / data.cols();
  const double rate = 1.0, level_max = 3.0;
  const OperatorFamily fam = OperatorFamily::fade(Vector::Constant(1, rate), level_max);
  const NoiseSchedule noise{};
  const ReferenceSigma ref = [](double t) { return 0.2 + t; };
  for (double t : {0.3, 0.5, 0.8}) {
    const double ratio = ref(t) * ref(t) / (ref(1.0) * ref(1.0));
    const double want = oracles::fade_level_for_ratio(ratio, m2, rate, level_max, noise.at(t), noise.at(1.0));
    const MatchedLevel got = mse_matched_level(data, fam, noise, ref, t);
    CHECK_FALSE(got.clamped);
    CHECK(std::abs(got.level - want) <= 1e-3);
  }
  CHECK(mse_matched_level(data, fam, noise, ref, 1.0).level == doctest::Approx(level_max).epsilon(1e-9));
  const MatchedLevel start = mse_matched_level(data, fam, noise, geometric_reference(1e-3, 0.1), 0.0);
  CHECK(start.level >= 0.0);
  CHECK(start.level <= 0.02 * level_max);
  CHECK_THROWS_AS(mse_matched_level(data, fam, noise, ref, 1.5), RangeError);

  const double s = 0.3;
  CHECK(corruption_mse(data, LinearOperator::identity(1), s) == doctest::Approx(s * s).epsilon(1e-14));
}

TEST_CASE("MSE-matched schedule is monotone and serializes") {
  RandomSource rng(7);
  const Matrix data = rng.normal_matrix(2, 1000);
  Vector rates(2);
  rates << 1.0, 0.5;
  const MatchedSchedule m =
      mse_matched_schedule(geometric_reference(1e-3, 0.1), data, OperatorFamily::fade(rates, 4.0), NoiseSchedule{}, 16);
  REQUIRE(m.schedule.entries.size() == 16);
  CHECK(m.schedule.entries.front().t == 0.0);
  CHECK(m.schedule.entries.back().t == 1.0);
  CHECK_NOTHROW(m.schedule.validate());
  CHECK(schedule_from_json(schedule_to_json(m.schedule)) == m.schedule);
  const ReferenceSigma falling = [](double t) { return 1.0 - 0.5 * t; };
  CHECK_THROWS_AS(mse_matched_schedule(falling, data, OperatorFamily::fade(rates, 4.0), NoiseSchedule{}, 8),
                  RangeError);
}
