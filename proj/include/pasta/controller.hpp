#pragma once

#include <cstdint>

namespace pasta {

struct ControllerConfig {
  double mu_start = 10.0;
  double mu_min = 0.05;
  double mu_max = 10.0;
  double tau = 0.4;          // conflict threshold
  double lambda_ema = 0.05;  // EMA factor
  std::int64_t horizon = 1;  // T, in training iterations
  bool decay = true;         // false pins the base schedule at mu_start
  bool braking = true;       // false forces beta = 0

  // Throws ConfigError on an inconsistent schedule.
  void validate() const;
};

// One controller update, as written to the metrics trace.
struct ControllerTrace {
  std::int64_t t = 0;
  double kappa = 0.0;
  double mu_base = 0.0;
  double beta = 0.0;
  double mu_star = 0.0;
  double mu = 0.0;
};

double braking_boost(double kappa, double tau);
double target_mu(double mu_base, double beta, double mu_max);

// Closed-loop schedule for the STCH smoothness: linear base decay, braking
// toward mu_max when the conflict ratio exceeds tau, and EMA inertia.
class SmoothnessController {
 public:
  explicit SmoothnessController(ControllerConfig config);

  const ControllerConfig& config() const { return config_; }
  double mu() const { return mu_; }
  std::int64_t t() const { return t_; }

  double base_decay(std::int64_t t) const;

  // Consumes the latest conflict ratio at the current t, updates mu, then
  // advances t by one.
  ControllerTrace step(double kappa);

  // Reinstates saved state (checkpoint resume).
  void restore(std::int64_t t, double mu);

 private:
  ControllerConfig config_;
  double mu_;
  std::int64_t t_ = 0;
};

}  // namespace pasta
