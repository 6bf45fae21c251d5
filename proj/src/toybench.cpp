#include "pasta/toybench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "pasta/error.hpp"
#include "pasta/rng.hpp"
#include "pasta/scalarization.hpp"

namespace pasta {

std::vector<double> ConvexQuadratic::objectives(std::span<const double> x) const {
  return {x[0] * x[0], (x[0] - 1.0) * (x[0] - 1.0)};
}

std::vector<std::vector<double>> ConvexQuadratic::jacobian(std::span<const double> x) const {
  return {{2.0 * x[0]}, {2.0 * (x[0] - 1.0)}};
}

std::vector<double> ConcaveExponential::objectives(std::span<const double> x) const {
  const double d0 = (x[0] + h_) * (x[0] + h_) + x[1] * x[1];
  const double d1 = (x[0] - h_) * (x[0] - h_) + x[1] * x[1];
  return {1.0 - std::exp(-d0), 1.0 - std::exp(-d1)};
}

std::vector<std::vector<double>> ConcaveExponential::jacobian(std::span<const double> x) const {
  const double e0 = std::exp(-((x[0] + h_) * (x[0] + h_) + x[1] * x[1]));
  const double e1 = std::exp(-((x[0] - h_) * (x[0] - h_) + x[1] * x[1]));
  return {{2.0 * (x[0] + h_) * e0, 2.0 * x[1] * e0}, {2.0 * (x[0] - h_) * e1, 2.0 * x[1] * e1}};
}

std::string to_string(ToyScalarizer s) {
  switch (s) {
    case ToyScalarizer::kLinear:
      return "linear";
    case ToyScalarizer::kTch:
      return "tch";
    case ToyScalarizer::kStch:
      return "stch";
  }
  return "unknown";
}

namespace {

std::vector<double> negate(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

}  // namespace

double stch_minimization(std::span<const double> f, std::span<const double> w, std::span<const double> z, double mu) {
  return -stch_scalarize(negate(f), w, negate(z), mu);
}

ToySolution solve_scalarized(const SyntheticMop& mop, const ToySolveConfig& config, std::span<const double> w,
                             std::span<const double> x0) {
  const std::size_t m = mop.objective_count();
  const std::size_t n = mop.decision_dim();
  if (w.size() != m) throw ContractError("preference length must equal the objective count");
  if (x0.size() != n) throw ContractError("start point length must equal the decision dimension");
  // Maximization form on -f: utopia z* = -z = reference_offset.
  const std::vector<double> utopia(m, config.reference_offset);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> coef(m);
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<double> f = mop.objectives(x);
    const auto jac = mop.jacobian(x);
    switch (config.scalarizer) {
      case ToyScalarizer::kLinear:
        std::copy(w.begin(), w.end(), coef.begin());
        break;
      case ToyScalarizer::kTch: {
        const std::size_t j = tch_worst_index(negate(f), w, utopia).index;
        std::fill(coef.begin(), coef.end(), 0.0);
        coef[j] = w[j];
        break;
      }
      case ToyScalarizer::kStch: {
        // d STCH / d f_i = w_i delta_i.
        const auto delta = stch_attention(negate(f), w, utopia, config.mu);
        for (std::size_t i = 0; i < m; ++i) coef[i] = delta[i] * w[i];
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      double g = 0.0;
      for (std::size_t i = 0; i < m; ++i) g += coef[i] * jac[i][k];
      x[k] -= config.learning_rate * g;
      if (!std::isfinite(x[k])) {
        throw DivergenceError("toybench", fmt::format("non-finite iterate at step {}", step));
      }
    }
  }
  return {x, mop.objectives(x)};
}

std::vector<std::vector<double>> non_dominated_min(std::vector<std::vector<double>> points) {
  if (points.empty()) return {};
  const std::size_t m = points.front().size();
  if (m == 1) {
    auto best = *std::min_element(points.begin(), points.end());
    return {best};
  }
  if (m == 2) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    std::vector<std::vector<double>> front;
    double best_second = std::numeric_limits<double>::infinity();
    for (auto& p : points) {
      if (p[1] < best_second) {
        best_second = p[1];
        front.push_back(std::move(p));
      }
    }
    return front;
  }
  std::vector<std::vector<double>> front;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j == i) continue;
      bool no_worse = true;
      bool better = false;
      for (std::size_t k = 0; k < m; ++k) {
        if (points[j][k] > points[i][k]) no_worse = false;
        if (points[j][k] < points[i][k]) better = true;
      }
      dominated = no_worse && better;
    }
    if (!dominated && std::find(front.begin(), front.end(), points[i]) == front.end()) front.push_back(points[i]);
  }
  return front;
}

std::vector<std::vector<double>> pareto_grid_oracle(const SyntheticMop& mop, int resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
  const auto lo = mop.lower();
  const auto hi = mop.upper();
  const std::size_t n = mop.decision_dim();
  std::vector<std::vector<double>> images;
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (resolution - 1);
    images.push_back(mop.objectives(x));
    std::size_t k = 0;
    while (k < n && ++idx[k] == resolution) idx[k++] = 0;
    if (k == n) break;
  }
  return non_dominated_min(std::move(images));
}

namespace {

double objective_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

ToyBenchReport run_toybench(const ToyBenchConfig& config) {
  if (config.runs <= 0) throw ConfigError("toybench runs must be positive");
  if (!(config.w_low > 0.0 && config.w_low <= config.w_high && config.w_high < 1.0)) {
    throw ConfigError("toybench preference range must satisfy 0 < w_low <= w_high < 1");
  }
  ConcaveExponential mop;
  ToyBenchReport report;
  report.oracle_front = pareto_grid_oracle(mop, config.grid_resolution);
  const auto& front = report.oracle_front;
  const auto endpoint_a = *std::min_element(front.begin(), front.end(),
                                            [](const auto& p, const auto& q) { return p[0] < q[0]; });
  const auto endpoint_b = *std::min_element(front.begin(), front.end(),
                                            [](const auto& p, const auto& q) { return p[1] < q[1]; });
  const std::vector<double> reference(2, -0.05);

  Rng rng(config.seed, 0x70E);
  const auto lo = mop.lower();
  const auto hi = mop.upper();
  int linear_ok = 0;
  int stch_ok = 0;
  for (int r = 0; r < config.runs; ++r) {
    const double w1 = rng.uniform(config.w_low, config.w_high);
    const std::vector<double> w{w1, 1.0 - w1};
    const std::vector<double> x0{rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1])};

    ToySolveConfig lin;
    lin.scalarizer = ToyScalarizer::kLinear;
    lin.steps = config.steps;
    lin.learning_rate = config.learning_rate;
    ToySolution ls = solve_scalarized(mop, lin, w, x0);
    const double da = objective_distance(ls.f, endpoint_a);
    const double db = objective_distance(ls.f, endpoint_b);
    ToyRun lr{r, "linear", w1, x0, ls.x, ls.f, da <= db ? endpoint_a : endpoint_b, std::min(da, db), false};
    lr.success = lr.distance <= config.tolerance;
    linear_ok += lr.success ? 1 : 0;

    ToySolveConfig st = lin;
    st.scalarizer = ToyScalarizer::kStch;
    st.mu = config.mu;
    ToySolution ss = solve_scalarized(mop, st, w, x0);
    const auto target = *std::min_element(front.begin(), front.end(), [&](const auto& p, const auto& q) {
      return stch_minimization(p, w, reference, config.mu) < stch_minimization(q, w, reference, config.mu);
    });
    ToyRun sr{r, fmt::format("stch_{}", config.mu), w1, x0, ss.x, ss.f, target, objective_distance(ss.f, target),
              false};
    sr.success = sr.distance <= config.tolerance;
    stch_ok += sr.success ? 1 : 0;

    report.runs.push_back(std::move(lr));
    report.runs.push_back(std::move(sr));
  }
  report.linear_endpoint_fraction = static_cast<double>(linear_ok) / config.runs;
  report.stch_oracle_fraction = static_cast<double>(stch_ok) / config.runs;
  return report;
}

void write_toybench_csv(const ToyBenchReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  out << "run,method,w1,w2,x0_1,x0_2,x_1,x_2,f_1,f_2,target_1,target_2,distance,success\n";
  for (const auto& r : report.runs) {
    out << fmt::format("{},{},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{}\n",
                       r.index, r.method, r.w1, 1.0 - r.w1, r.x0[0], r.x0[1], r.x[0], r.x[1], r.f[0], r.f[1],
                       r.target[0], r.target[1], r.distance, r.success ? 1 : 0);
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path));
}

}  // namespace pasta
