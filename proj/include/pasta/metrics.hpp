#pragma once

#include <span>
#include <string>
#include <vector>

namespace pasta {

using Point = std::vector<double>;

// Hypervolume dominated by `points` with reference point 0 (maximization).
// Coordinates below 0 contribute nothing. Exact, by slicing along the last
// objective down to a 2-D sweep. Empty input gives 0.
double hypervolume(std::span<const Point> points);

// Subset of points not dominated by any other (maximization). Duplicates are
// kept once.
std::vector<Point> non_dominated(std::span<const Point> points);

// a dominates b: a >= b everywhere and a > b somewhere.
bool dominates(std::span<const double> a, std::span<const double> b);

double expected_utility(std::span<const double> returns, std::span<const double> w);

// Per-objective bounds shared by everything being compared.
struct NormalizationBounds {
  std::vector<double> min;
  std::vector<double> max;

  static NormalizationBounds from_points(std::span<const Point> points);
  // (v - min) / (max - min), clamped to [0,1]; a zero range maps to 0.
  Point normalize(std::span<const double> raw) const;
};

inline constexpr double kWinTieTolerance = 1e-12;
inline constexpr double kDominanceTolerance = 1e-9;

// mean_hv[method][preference]. Fraction of preferences where the method is
// within kWinTieTolerance of the best, so ties count for every tied method.
std::vector<double> win_rate(const std::vector<std::vector<double>>& mean_hv);

// values[method][preference][objective]. Fraction of (preference, objective)
// cells where the method is within kDominanceTolerance of the best.
std::vector<double> objective_dominance_rate(const std::vector<std::vector<std::vector<double>>>& values);

struct PerformanceProfile {
  std::vector<std::vector<double>> ratios;  // ratios[instance][method], +inf when HV is 0
  std::vector<double> theta_grid;           // sorted, starts at 1, ends at theta_max
  std::vector<std::vector<double>> rho;     // rho[method][k] at theta_grid[k]
  std::vector<double> auc;
  std::vector<std::string> warnings;

  double theta_max() const { return theta_grid.back(); }
};

// hv[instance][method]. Ratios r = best / own; rho_b(theta) is the fraction
// of instances with r <= theta; AUC is the trapezoid integral of rho_b over
// the grid of observed finite ratios, divided by (theta_max - 1). When
// theta_max is 1 the AUC is rho_b(1). A method whose HV is 0 everywhere gets
// AUC 0 and a warning.
PerformanceProfile dolan_more_profile(const std::vector<std::vector<double>>& hv);

}  // namespace pasta
