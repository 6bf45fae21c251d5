#include "pasta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

namespace {

std::size_t common_dimension(std::span<const Point> points) {
  const std::size_t m = points.front().size();
  for (const auto& p : points) {
    if (p.size() != m) throw ContractError("points differ in objective count");
    for (double v : p) {
      if (!std::isfinite(v)) throw ContractError("hypervolume input contains a non-finite value");
    }
  }
  if (m == 0) throw ContractError("points have no objectives");
  return m;
}

double sweep_2d(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  });
  double area = 0.0;
  double y_max = 0.0;
  for (const auto& [x, y] : pts) {
    if (y > y_max) {
      area += x * (y - y_max);
      y_max = y;
    }
  }
  return area;
}

// points already clipped to >= 0; uses the first d coordinates.
double hv_recursive(const std::vector<Point>& points, std::size_t d) {
  if (points.empty()) return 0.0;
  if (d == 1) {
    double best = 0.0;
    for (const auto& p : points) best = std::max(best, p[0]);
    return best;
  }
  if (d == 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.emplace_back(p[0], p[1]);
    return sweep_2d(std::move(pts));
  }
  std::vector<double> levels;
  for (const auto& p : points) levels.push_back(p[d - 1]);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double volume = 0.0;
  std::vector<Point> slice;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double top = levels[k];
    const double bottom = k + 1 < levels.size() ? levels[k + 1] : 0.0;
    if (top <= 0.0) break;
    slice.clear();
    for (const auto& p : points) {
      if (p[d - 1] >= top) slice.push_back(p);
    }
    volume += (top - bottom) * hv_recursive(slice, d - 1);
  }
  return volume;
}

}  // namespace

double hypervolume(std::span<const Point> points) {
  if (points.empty()) return 0.0;
  const std::size_t m = common_dimension(points);
  std::vector<Point> clipped;
  clipped.reserve(points.size());
  for (const auto& p : points) {
    Point q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = std::max(0.0, p[i]);
    clipped.push_back(std::move(q));
  }
  return hv_recursive(non_dominated(clipped), m);
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strictly = true;
  }
  return strictly;
}

std::vector<Point> non_dominated(std::span<const Point> points) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j != i && dominates(points[j], points[i])) keep = false;
    }
    if (keep && std::find(out.begin(), out.end(), points[i]) == out.end()) out.push_back(points[i]);
  }
  return out;
}

double expected_utility(std::span<const double> returns, std::span<const double> w) {
  if (returns.size() != w.size()) throw ContractError("expected utility needs matching lengths");
  return std::inner_product(returns.begin(), returns.end(), w.begin(), 0.0);
}

NormalizationBounds NormalizationBounds::from_points(std::span<const Point> points) {
  if (points.empty()) throw ContractError("cannot derive normalization bounds from no points");
  const std::size_t m = common_dimension(points);
  NormalizationBounds b;
  b.min.assign(m, std::numeric_limits<double>::infinity());
  b.max.assign(m, -std::numeric_limits<double>::infinity());
  for (const auto& p : points) {
    for (std::size_t i = 0; i < m; ++i) {
      b.min[i] = std::min(b.min[i], p[i]);
      b.max[i] = std::max(b.max[i], p[i]);
    }
  }
  return b;
}

Point NormalizationBounds::normalize(std::span<const double> raw) const {
  if (raw.size() != min.size()) throw ContractError("point does not match normalization bounds");
  Point out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double range = max[i] - min[i];
    out[i] = range > 0.0 ? std::clamp((raw[i] - min[i]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

std::vector<double> win_rate(const std::vector<std::vector<double>>& mean_hv) {
  if (mean_hv.empty()) return {};
  const std::size_t prefs = mean_hv.front().size();
  for (const auto& row : mean_hv) {
    if (row.size() != prefs) throw ContractError("win rate needs every method on the same preference set");
  }
  std::vector<double> wins(mean_hv.size(), 0.0);
  if (prefs == 0) return wins;
  for (std::size_t p = 0; p < prefs; ++p) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& row : mean_hv) best = std::max(best, row[p]);
    for (std::size_t b = 0; b < mean_hv.size(); ++b) {
      if (mean_hv[b][p] >= best - kWinTieTolerance) wins[b] += 1.0;
    }
  }
  for (double& w : wins) w /= static_cast<double>(prefs);
  return wins;
}

std::vector<double> objective_dominance_rate(const std::vector<std::vector<std::vector<double>>>& values) {
  if (values.empty()) return {};
  const std::size_t prefs = values.front().size();
  const std::size_t m = prefs ? values.front().front().size() : 0;
  for (const auto& method : values) {
    if (method.size() != prefs) throw ContractError("dominance rate needs a shared preference grid");
    for (const auto& cell : method) {
      if (cell.size() != m) throw ContractError("dominance rate needs a shared objective count");
    }
  }
  std::vector<double> rate(values.size(), 0.0);
  if (prefs == 0 || m == 0) return rate;
  for (std::size_t p = 0; p < prefs; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& method : values) best = std::max(best, method[p][i]);
      for (std::size_t b = 0; b < values.size(); ++b) {
        if (values[b][p][i] >= best - kDominanceTolerance) rate[b] += 1.0;
      }
    }
  }
  for (double& r : rate) r /= static_cast<double>(prefs * m);
  return rate;
}

PerformanceProfile dolan_more_profile(const std::vector<std::vector<double>>& hv) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (hv.empty()) throw ContractError("performance profile needs at least one instance");
  const std::size_t methods = hv.front().size();
  if (methods == 0) throw ContractError("performance profile needs at least one method");
  PerformanceProfile prof;
  std::vector<double> finite{1.0};
  for (const auto& row : hv) {
    if (row.size() != methods) throw ContractError("every instance must score every method");
    const double best = *std::max_element(row.begin(), row.end());
    std::vector<double> r(methods, kInf);
    for (std::size_t b = 0; b < methods; ++b) {
      if (row[b] < 0.0 || !std::isfinite(row[b])) throw ContractError("hypervolumes must be finite and >= 0");
      if (row[b] > 0.0) {
        r[b] = best / row[b];
        finite.push_back(r[b]);
      }
    }
    prof.ratios.push_back(std::move(r));
  }
  std::sort(finite.begin(), finite.end());
  finite.erase(std::unique(finite.begin(), finite.end()), finite.end());
  prof.theta_grid = finite;

  const double n = static_cast<double>(hv.size());
  const double span = prof.theta_max() - 1.0;
  prof.rho.assign(methods, {});
  prof.auc.assign(methods, 0.0);
  for (std::size_t b = 0; b < methods; ++b) {
    bool any_positive = false;
    for (const auto& row : hv) any_positive = any_positive || row[b] > 0.0;
    for (double theta : prof.theta_grid) {
      double count = 0.0;
      for (const auto& r : prof.ratios) count += r[b] <= theta ? 1.0 : 0.0;
      prof.rho[b].push_back(count / n);
    }
    if (!any_positive) {
      prof.warnings.push_back(fmt::format("method {} has zero hypervolume on every instance; AUC set to 0", b));
      continue;
    }
    if (span <= 0.0) {
      prof.auc[b] = prof.rho[b].front();
      continue;
    }
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < prof.theta_grid.size(); ++k) {
      area += 0.5 * (prof.rho[b][k] + prof.rho[b][k + 1]) * (prof.theta_grid[k + 1] - prof.theta_grid[k]);
    }
    prof.auc[b] = area / span;
  }
  return prof;
}

}  // namespace pasta
