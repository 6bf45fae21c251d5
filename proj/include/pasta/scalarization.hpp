#pragma once

#include <span>
#include <string>
#include <vector>

namespace pasta {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kDefaultZeta = 1.05;
inline constexpr double kDefaultRho = 0.15;

// Preference weights on the probability simplex.
class PreferenceVector {
 public:
  PreferenceVector() = default;
  // Throws ConfigError unless every weight is >= 0 and they sum to 1 within
  // kSimplexTolerance.
  explicit PreferenceVector(std::vector<double> weights);

  static PreferenceVector uniform(std::size_t m);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }
  std::string to_string() const;

 private:
  std::vector<double> weights_;
};

// Running per-objective extrema used to map raw returns into [0, 1].
class ReturnNormalizer {
 public:
  static constexpr double kEpsilon = 1e-8;

  explicit ReturnNormalizer(std::size_t objectives) : min_(objectives, 0.0), max_(objectives, 0.0) {}

  // Absorbs the batch extrema, then normalizes the batch mean. The first
  // batch ever seen initializes the extrema.
  std::vector<double> update_and_normalize(std::span<const std::vector<double>> batch_returns);
  std::vector<double> normalize(std::span<const double> returns) const;

  bool initialized() const { return initialized_; }
  std::span<const double> running_min() const { return min_; }
  std::span<const double> running_max() const { return max_; }
  // Reinstates saved extrema (checkpoint resume).
  void restore(std::vector<double> min, std::vector<double> max, bool initialized);

 private:
  std::vector<double> min_;
  std::vector<double> max_;
  bool initialized_ = false;
};

// z*_i = zeta for every objective.
std::vector<double> utopia_point(std::size_t m, double zeta = kDefaultZeta);

double linear_scalarize(std::span<const double> returns, std::span<const double> w);

struct TchSelection {
  std::size_t index = 0;           // argmax, ties to the lowest index
  std::vector<double> deviations;  // w_i (z*_i - r_i)
};

TchSelection tch_worst_index(std::span<const double> returns, std::span<const double> w,
                             std::span<const double> utopia);

// Smooth Tchebycheff value in maximization form,
//   S = -mu log sum_i exp(w_i (z*_i - r_i) / mu),
// evaluated with max subtraction. Throws ConfigError if mu <= 0.
double stch_scalarize(std::span<const double> returns, std::span<const double> w, std::span<const double> utopia,
                      double mu);

// Softmax over y_i / mu with y_i = w_i (z*_i - r_i). delta_i = -dS/dy_i, and
// the gradient with respect to the returns is dS/dr_i = w_i delta_i.
std::vector<double> stch_attention(std::span<const double> returns, std::span<const double> w,
                                   std::span<const double> utopia, double mu);

// (1 - rho) delta + rho / m. Throws ConfigError unless rho is in (0, 1).
std::vector<double> maintenance_mix(std::span<const double> delta, double rho);

struct AttentionWeights {
  std::vector<double> delta;
  std::vector<double> eta;
  double mu_used = 0.0;
  double rho = 0.0;
};

AttentionWeights compute_attention(std::span<const double> normalized_returns, std::span<const double> w,
                                   std::span<const double> utopia, double mu, double rho);

}  // namespace pasta
