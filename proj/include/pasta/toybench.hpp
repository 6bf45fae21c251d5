#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pasta {

// Differentiable multi-objective problem, all objectives minimized.
class SyntheticMop {
 public:
  virtual ~SyntheticMop() = default;

  virtual std::string name() const = 0;
  virtual std::size_t decision_dim() const = 0;
  virtual std::size_t objective_count() const = 0;
  virtual std::vector<double> objectives(std::span<const double> x) const = 0;
  // jacobian[i] = grad f_i(x)
  virtual std::vector<std::vector<double>> jacobian(std::span<const double> x) const = 0;

  // Decision box used by the grid oracle and for sampling starts.
  virtual std::vector<double> lower() const = 0;
  virtual std::vector<double> upper() const = 0;
};

// f1 = x^2, f2 = (x - 1)^2 on [-1, 2]. Convex front.
class ConvexQuadratic final : public SyntheticMop {
 public:
  std::string name() const override { return "convex"; }
  std::size_t decision_dim() const override { return 1; }
  std::size_t objective_count() const override { return 2; }
  std::vector<double> objectives(std::span<const double> x) const override;
  std::vector<std::vector<double>> jacobian(std::span<const double> x) const override;
  std::vector<double> lower() const override { return {-1.0}; }
  std::vector<double> upper() const override { return {2.0}; }
};

// f_i = 1 - exp(-||x - a_i||^2) with anchors (-h, 0) and (h, 0). The Pareto
// set is the segment between the anchors and its image is concave.
class ConcaveExponential final : public SyntheticMop {
 public:
  explicit ConcaveExponential(double half_separation = 1.25) : h_(half_separation) {}

  std::string name() const override { return "concave"; }
  std::size_t decision_dim() const override { return 2; }
  std::size_t objective_count() const override { return 2; }
  std::vector<double> objectives(std::span<const double> x) const override;
  std::vector<std::vector<double>> jacobian(std::span<const double> x) const override;
  std::vector<double> lower() const override { return {-1.5 * h_, -0.75 * h_}; }
  std::vector<double> upper() const override { return {1.5 * h_, 0.75 * h_}; }

 private:
  double h_;
};

enum class ToyScalarizer { kLinear, kTch, kStch };

std::string to_string(ToyScalarizer s);

struct ToySolveConfig {
  ToyScalarizer scalarizer = ToyScalarizer::kLinear;
  double mu = 0.05;
  // The reference point sits this far below the ideal point (0 here).
  double reference_offset = 0.05;
  int steps = 4000;
  double learning_rate = 0.05;
};

struct ToySolution {
  std::vector<double> x;
  std::vector<double> f;
};

// Smooth Tchebycheff in minimization form, mu log sum exp(w_i (f_i - z_i) / mu),
// evaluated through the maximization form on -f.
double stch_minimization(std::span<const double> f, std::span<const double> w, std::span<const double> z, double mu);

// Plain gradient descent on the scalarized loss. TCH steps along w_j grad f_j
// for the worst weighted deviation j. Throws DivergenceError with the step
// index if a non-finite value appears.
ToySolution solve_scalarized(const SyntheticMop& mop, const ToySolveConfig& config, std::span<const double> w,
                             std::span<const double> x0);

// Non-dominated (minimization) objective images over a uniform grid of the
// decision box with `resolution` points per axis.
std::vector<std::vector<double>> pareto_grid_oracle(const SyntheticMop& mop, int resolution);

// Minimization non-dominated filter. Sort based for m <= 2.
std::vector<std::vector<double>> non_dominated_min(std::vector<std::vector<double>> points);

struct ToyBenchConfig {
  std::uint64_t seed = 1;
  int runs = 50;
  double mu = 0.05;
  int grid_resolution = 601;
  int steps = 20000;
  double learning_rate = 0.2;
  double tolerance = 1e-2;
  double w_low = 0.25;   // interior preference range for w_1
  double w_high = 0.75;
};

struct ToyRun {
  int index = 0;
  std::string method;
  double w1 = 0.0;
  std::vector<double> x0;
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> target;  // nearest endpoint (linear) or oracle point (stch)
  double distance = 0.0;
  bool success = false;
};

struct ToyBenchReport {
  std::vector<ToyRun> runs;
  double linear_endpoint_fraction = 0.0;
  double stch_oracle_fraction = 0.0;
  std::vector<std::vector<double>> oracle_front;
};

// Linear and STCH(mu) on the concave problem from identical random starts.
ToyBenchReport run_toybench(const ToyBenchConfig& config);
void write_toybench_csv(const ToyBenchReport& report, const std::string& path);

}  // namespace pasta
