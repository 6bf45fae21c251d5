#include "pasta/surgery.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_set(const GradientSet& set) {
  if (set.grads.empty()) throw ContractError("gradient set is empty");
  const std::size_t n = set.grads.front().size();
  for (const auto& g : set.grads) {
    if (g.size() != n) throw ContractError("gradient vectors differ in length");
    for (double v : g) {
      if (!std::isfinite(v)) throw DivergenceError("actor", "non-finite objective gradient");
    }
  }
}

}  // namespace

ProjectionResult project_conflicts(const GradientSet& grads, Rng& rng, std::vector<ProjectionRecord>* log) {
  check_set(grads);
  const std::size_t m = grads.objective_count();
  ProjectionResult result;
  result.projected.grads = grads.grads;
  std::vector<double> norms_sq(m);
  for (std::size_t j = 0; j < m; ++j) norms_sq[j] = dot(grads.grads[j], grads.grads[j]);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < m; ++i) {
    order.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) order.push_back(j);
    }
    rng.shuffle(order.begin(), order.end());
    std::vector<double>& gi = result.projected.grads[i];
    for (std::size_t j : order) {
      const std::vector<double>& gj = grads.grads[j];
      ProjectionRecord rec{i, j, dot(gi, gj), false, 0.0};
      result.projected.pairs_examined += 1;
      if (rec.dot_before < 0.0) {
        result.projected.conflicts_found += 1;
        // A zero g_j cannot produce a negative dot; guard anyway.
        if (norms_sq[j] > 0.0) {
          const double scale = rec.dot_before / norms_sq[j];
          for (std::size_t k = 0; k < gi.size(); ++k) gi[k] -= scale * gj[k];
          rec.projected = true;
        }
      }
      rec.dot_after = rec.projected ? dot(gi, gj) : rec.dot_before;
      if (log) log->push_back(rec);
    }
  }
  result.kappa = result.projected.pairs_examined == 0
                     ? 0.0
                     : static_cast<double>(result.projected.conflicts_found) /
                           static_cast<double>(result.projected.pairs_examined);
  return result;
}

double conflict_ratio(const GradientSet& grads) {
  check_set(grads);
  const std::size_t m = grads.objective_count();
  if (m < 2) return 0.0;
  std::size_t conflicts = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (dot(grads.grads[i], grads.grads[j]) < 0.0) conflicts += 2;
    }
  }
  return static_cast<double>(conflicts) / static_cast<double>(m * (m - 1));
}

std::vector<double> summed_update_direction(const GradientSet& projected, SumMode mode, std::span<const double> eta) {
  check_set(projected);
  const std::size_t m = projected.objective_count();
  std::vector<double> coef(m, 1.0);
  if (mode == SumMode::kWeightedByEta) {
    if (eta.size() != m) throw ContractError("eta length must equal the objective count");
    double sum = 0.0;
    for (double e : eta) {
      if (e < 0.0) throw ContractError("eta must be non-negative");
      sum += e;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ContractError(fmt::format("eta must sum to 1, got {}", sum));
    for (std::size_t i = 0; i < m; ++i) coef[i] = static_cast<double>(m) * eta[i];
  }
  std::vector<double> out(projected.grads.front().size(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += coef[i] * projected.grads[i][k];
  }
  return out;
}

}  // namespace pasta
