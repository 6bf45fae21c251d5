#include "pasta/advantage.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

std::vector<double> StepTable::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void StepTable::append_row(std::span<const double> values) {
  if (values.size() != cols_) {
    throw ContractError(fmt::format("row has {} entries, table has {} columns", values.size(), cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void StepTable::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, 0.0);
}

void RolloutBatch::check_consistent() const {
  const std::size_t t = size();
  if (states.size() != t || raw_actions.size() != t || actions.size() != t || rewards.rows() != t ||
      dones.size() != t || terminals.size() != t || values.rows() != t || next_values.rows() != t) {
    throw ContractError("rollout batch fields disagree in length");
  }
  const std::size_t m = objective_count();
  if (values.cols() != m || next_values.cols() != m) throw ContractError("rollout batch objective count mismatch");
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda_gae) {
  batch.check_consistent();
  const std::size_t t_len = batch.size();
  const std::size_t m = batch.objective_count();
  batch.advantages.resize(t_len, m);
  batch.value_targets.resize(t_len, m);
  for (std::size_t i = 0; i < m; ++i) {
    double next_advantage = 0.0;
    for (std::size_t t = t_len; t-- > 0;) {
      const double not_terminal = batch.terminals[t] ? 0.0 : 1.0;
      const double not_done = batch.dones[t] ? 0.0 : 1.0;
      const double delta =
          batch.rewards(t, i) + gamma * not_terminal * batch.next_values(t, i) - batch.values(t, i);
      const double adv = delta + gamma * lambda_gae * not_done * next_advantage;
      batch.advantages(t, i) = adv;
      batch.value_targets(t, i) = adv + batch.values(t, i);
      next_advantage = adv;
    }
  }
}

void normalize_advantages(RolloutBatch& batch) {
  const std::size_t t_len = batch.advantages.rows();
  const std::size_t m = batch.advantages.cols();
  if (t_len == 0) throw ContractError("cannot normalize an empty batch");
  batch.normalized_advantages.resize(t_len, m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) mean += batch.advantages(t, i);
    mean /= static_cast<double>(t_len);
    double var = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
      const double d = batch.advantages(t, i) - mean;
      var += d * d;
    }
    const double denom = std::sqrt(var / static_cast<double>(t_len)) + 1e-8;
    for (std::size_t t = 0; t < t_len; ++t) {
      batch.normalized_advantages(t, i) = (batch.advantages(t, i) - mean) / denom;
    }
  }
}

}  // namespace pasta
