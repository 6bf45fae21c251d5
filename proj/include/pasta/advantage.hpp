#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pasta {

// Row-major T x m table.
class StepTable {
 public:
  StepTable() = default;
  StepTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;

  void append_row(std::span<const double> values);
  void resize(std::size_t rows, std::size_t cols);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// One on-policy rollout. `dones` cut credit assignment (termination or
// truncation); `terminals` additionally zero the bootstrap. next_values[t]
// holds V(s_{t+1}) for the true successor of step t, which after a
// truncation is the final observation rather than the next reset state.
struct RolloutBatch {
  explicit RolloutBatch(std::size_t objectives = 0) : rewards(0, objectives), values(0, objectives),
                                                       next_values(0, objectives) {}

  std::size_t size() const { return old_log_probs.size(); }
  std::size_t objective_count() const { return rewards.cols(); }

  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> raw_actions;
  std::vector<std::vector<double>> actions;
  std::vector<double> old_log_probs;
  StepTable rewards;
  std::vector<std::uint8_t> dones;
  std::vector<std::uint8_t> terminals;
  StepTable values;
  StepTable next_values;

  StepTable advantages;
  StepTable normalized_advantages;
  StepTable value_targets;

  std::vector<std::vector<double>> episodic_returns;

  // Throws ContractError if the time-indexed fields disagree in length.
  void check_consistent() const;
};

// Per-objective GAE:
//   delta_t = r_t + gamma (1 - terminal_t) V(s_{t+1}) - V(s_t)
//   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
//   target  = A_t + V(s_t)
void compute_gae(RolloutBatch& batch, double gamma, double lambda_gae);

// Per-objective (A - mean) / (population std + 1e-8) over the whole batch.
void normalize_advantages(RolloutBatch& batch);

}  // namespace pasta
