#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pasta/error.hpp"
#include "pasta/metrics.hpp"
#include "pasta/rng.hpp"

using namespace pasta;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<Point> pts(n, Point(m));
  for (auto& p : pts) {
    for (auto& v : p) v = rng.uniform();
  }
  return pts;
}

}  // namespace

TEST_CASE("hypervolume of small hand-checked sets") {
  CHECK(hypervolume(std::vector<Point>{}) == 0.0);
  CHECK(hypervolume(std::vector<Point>{{1.0, 1.0}}) == 1.0);
  CHECK(hypervolume(std::vector<Point>{{1.0, 0.5}, {0.5, 1.0}}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(hypervolume(std::vector<Point>{{1.0, 0.5}, {0.5, 1.0}, {0.4, 0.4}}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(hypervolume(std::vector<Point>{{0.5, 0.5, 0.5}}) == 0.125);
  CHECK(hypervolume(std::vector<Point>{{-0.5, 0.5}}) == 0.0);
}

TEST_CASE("hypervolume equals inclusion-exclusion on every small set") {
  Rng rng(31);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t m = 2 + rng.index(3);
    const std::size_t n = 1 + rng.index(5);
    const auto pts = random_points(rng, n, m);
    CHECK(std::abs(hypervolume(pts) - oracle::hv_inclusion_exclusion(pts)) < 1e-12);
  }
}

TEST_CASE("hypervolume agrees with a Monte-Carlo estimate") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const auto pts = random_points(rng, 10, 3);
    const auto mc = oracle::hv_monte_carlo(pts, 200000, 100 + trial);
    CHECK(std::abs(hypervolume(pts) - mc.value) < 3.0 * mc.standard_error);
  }
}

TEST_CASE("hypervolume is monotone and ignores dominated points") {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng.index(3);
    auto pts = random_points(rng, 1 + rng.index(8), m);
    const double before = hypervolume(pts);
    Point dominated = pts[0];
    for (auto& v : dominated) v *= rng.uniform();
    auto with_dominated = pts;
    with_dominated.push_back(dominated);
    CHECK(std::abs(hypervolume(with_dominated) - before) < 1e-12);
    pts.push_back(random_points(rng, 1, m)[0]);
    CHECK(hypervolume(pts) >= before - 1e-12);
  }
}

TEST_CASE("shared normalization makes hypervolume invariant to affine rescaling of one objective") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto raw = random_points(rng, 12, 3);
    for (auto& p : raw) {
      for (auto& v : p) v = 20.0 * v - 5.0;
    }
    const auto hv_of = [](const std::vector<Point>& pts) {
      const auto bounds = NormalizationBounds::from_points(pts);
      std::vector<Point> norm;
      for (const auto& p : pts) norm.push_back(bounds.normalize(p));
      return hypervolume(norm);
    };
    const double a = rng.uniform(0.1, 50.0);
    const double b = rng.uniform(-100.0, 100.0);
    const std::size_t k = rng.index(3);
    auto scaled = raw;
    for (auto& p : scaled) p[k] = a * p[k] + b;
    CHECK(std::abs(hv_of(raw) - hv_of(scaled)) < 1e-12);
  }
}

TEST_CASE("normalization clamps and handles a flat objective") {
  const std::vector<Point> pts{{0.0, 3.0}, {10.0, 3.0}};
  const auto b = NormalizationBounds::from_points(pts);
  const auto p = b.normalize(std::vector<double>{5.0, 3.0});
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.0);
  CHECK(b.normalize(std::vector<double>{20.0, 3.0})[0] == 1.0);
}

TEST_CASE("dominance and the non-dominated filter") {
  CHECK(dominates(std::vector<double>{1, 1}, std::vector<double>{1, 0}));
  CHECK_FALSE(dominates(std::vector<double>{1, 1}, std::vector<double>{1, 1}));
  CHECK_FALSE(dominates(std::vector<double>{1, 0}, std::vector<double>{0, 1}));
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 20, 3);
    const auto nd = non_dominated(pts);
    for (const auto& a : nd) {
      for (const auto& b : nd) CHECK_FALSE(dominates(a, b));
    }
    for (const auto& p : pts) {
      const bool kept = std::find(nd.begin(), nd.end(), p) != nd.end();
      const bool beaten = std::any_of(pts.begin(), pts.end(), [&](const Point& q) { return dominates(q, p); });
      CHECK(kept != beaten);
    }
    CHECK(hypervolume(nd) == doctest::Approx(hypervolume(pts)).epsilon(1e-12));
  }
}

TEST_CASE("expected utility is linear in the returns") {
  CHECK(expected_utility(std::vector<double>{4, 5, 6}, std::vector<double>{1, 0, 0}) == 4.0);
  const std::vector<double> u{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(expected_utility(std::vector<double>{3, 3, 3}, u) == doctest::Approx(3.0));
  const std::vector<double> r1{0.2, -1.0, 4.0};
  const std::vector<double> r2{1.5, 2.0, -0.5};
  const std::vector<double> w{0.2, 0.3, 0.5};
  std::vector<double> sum(3);
  for (int i = 0; i < 3; ++i) sum[i] = r1[i] + r2[i];
  CHECK(expected_utility(sum, w) == doctest::Approx(expected_utility(r1, w) + expected_utility(r2, w)));
}

TEST_CASE("win rate counts column maxima with ties shared") {
  const std::vector<std::vector<double>> strict{{0.9, 0.8, 0.7}, {0.1, 0.2, 0.3}};
  CHECK(win_rate(strict) == std::vector<double>{1.0, 0.0});
  const std::vector<std::vector<double>> tied{{0.5, 0.5}, {0.5, 0.5}};
  CHECK(win_rate(tied) == std::vector<double>{1.0, 1.0});
  std::vector<std::vector<double>> half(2, std::vector<double>(8));
  for (int p = 0; p < 8; ++p) {
    half[0][p] = p < 4 ? 1.0 : 0.0;
    half[1][p] = p < 4 ? 0.0 : 1.0;
  }
  CHECK(win_rate(half) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("objective dominance rate over an 8 x 3 grid") {
  // Method 0 is best in the first 14 of 24 cells, method 1 in the rest.
  std::vector<std::vector<std::vector<double>>> v(2, std::vector<std::vector<double>>(8, std::vector<double>(3)));
  int cell = 0;
  for (int p = 0; p < 8; ++p) {
    for (int i = 0; i < 3; ++i, ++cell) {
      v[0][p][i] = cell < 14 ? 1.0 : 0.0;
      v[1][p][i] = cell < 14 ? 0.0 : 1.0;
    }
  }
  const auto odr = objective_dominance_rate(v);
  CHECK(std::abs(odr[0] - 14.0 / 24.0) < 1e-12);
  CHECK(std::abs(odr[1] - 10.0 / 24.0) < 1e-12);
  CHECK(std::round(odr[0] * 1000.0) / 10.0 == 58.3);
}

TEST_CASE("Dolan-More profile: single method, two-to-one, permutation, zero column") {
  const auto single = dolan_more_profile({{0.3}, {0.7}, {0.1}});
  CHECK(single.auc[0] == 1.0);

  const std::vector<std::vector<double>> twice{{0.8, 0.4}, {0.6, 0.3}, {0.2, 0.1}};
  const auto prof = dolan_more_profile(twice);
  CHECK(prof.theta_max() == 2.0);
  CHECK(prof.rho[1].front() == 0.0);
  CHECK(prof.rho[1].back() == 1.0);
  CHECK(std::abs(prof.auc[0] - 1.0) < 1e-12);
  CHECK(std::abs(prof.auc[1] - oracle::trapezoid({1.0, 2.0}, {0.0, 1.0}) / 1.0) < 1e-12);
  CHECK(std::abs(prof.auc[1] - 0.5) < 1e-12);

  Rng rng(14);
  std::vector<std::vector<double>> hv(10, std::vector<double>(3));
  for (auto& row : hv) {
    for (auto& v : row) v = rng.uniform(0.05, 1.0);
  }
  const auto base = dolan_more_profile(hv);
  for (int k = 0; k < 10; ++k) {
    auto shuffled = hv;
    rng.shuffle(shuffled.begin(), shuffled.end());
    const auto again = dolan_more_profile(shuffled);
    for (int b = 0; b < 3; ++b) CHECK(std::abs(again.auc[b] - base.auc[b]) < 1e-12);
  }
  for (double a : base.auc) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }

  const auto zero = dolan_more_profile({{0.5, 0.0}, {0.4, 0.0}});
  CHECK(zero.auc[1] == 0.0);
  CHECK(zero.warnings.size() == 1);
  CHECK(std::isinf(zero.ratios[0][1]));
}

TEST_CASE("Dolan-More AUC matches a hand trapezoid on a planted fixture") {
  // Instances x methods. Ratios: m0 = {1, 1.25, 1}, m1 = {2, 1, 1.5}.
  const std::vector<std::vector<double>> hv{{0.8, 0.4}, {0.5, 0.625}, {0.75, 0.5}};
  const auto prof = dolan_more_profile(hv);
  const std::vector<double> grid{1.0, 1.25, 1.5, 2.0};
  REQUIRE(prof.theta_grid == grid);
  const std::vector<double> rho0{2.0 / 3, 1.0, 1.0, 1.0};
  const std::vector<double> rho1{1.0 / 3, 1.0 / 3, 2.0 / 3, 1.0};
  CHECK(std::abs(prof.auc[0] - oracle::trapezoid(grid, rho0)) < 1e-12);
  CHECK(std::abs(prof.auc[1] - oracle::trapezoid(grid, rho1)) < 1e-12);
  // By hand, over a span of 1: m0 = 0.25*(5/6) + 0.25 + 0.5, m1 = 0.25/3 + 0.25*0.5 + 0.5*(5/6).
  CHECK(std::abs(prof.auc[0] - (0.25 * 5.0 / 6.0 + 0.75)) < 1e-12);
  CHECK(std::abs(prof.auc[1] - (0.25 / 3.0 + 0.125 + 0.5 * 5.0 / 6.0)) < 1e-12);
}

TEST_CASE("invalid metric inputs are rejected") {
  CHECK_THROWS_AS(dolan_more_profile({}), ContractError);
  CHECK_THROWS_AS(dolan_more_profile({{0.1, 0.2}, {0.3}}), ContractError);
  CHECK_THROWS_AS(dolan_more_profile({{-0.1}}), ContractError);
}
