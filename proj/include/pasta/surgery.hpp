#pragma once

#include <span>
#include <vector>

#include "pasta/rng.hpp"

namespace pasta {

// Per-objective flat gradients, all aligned to the same parameter layout.
struct GradientSet {
  std::vector<std::vector<double>> grads;
  std::size_t pairs_examined = 0;
  std::size_t conflicts_found = 0;

  std::size_t objective_count() const { return grads.size(); }
};

// One examined ordered pair (i, j) during projection.
struct ProjectionRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  double dot_before = 0.0;  // current g_i . original g_j
  bool projected = false;
  double dot_after = 0.0;   // after the projection (equal to dot_before when skipped)
};

struct ProjectionResult {
  GradientSet projected;
  double kappa = 0.0;
};

// Objective-level PCGrad. For each i, visits every j != i in a freshly
// shuffled order and removes from g_i its component along the ORIGINAL g_j
// whenever they conflict. kappa = conflicts / m(m-1), 0 when m == 1.
// When `log` is given, every examined pair is appended in visit order.
ProjectionResult project_conflicts(const GradientSet& grads, Rng& rng, std::vector<ProjectionRecord>* log = nullptr);

// Fraction of ordered pairs with a negative inner product, no projection.
double conflict_ratio(const GradientSet& grads);

enum class SumMode { kSum, kWeightedByEta };

// kSum: sum_i g_i. kWeightedByEta: sum_i m eta_i g_i, so uniform eta equals kSum.
std::vector<double> summed_update_direction(const GradientSet& projected, SumMode mode,
                                            std::span<const double> eta = {});

}  // namespace pasta
