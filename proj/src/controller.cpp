#include "pasta/controller.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

void ControllerConfig::validate() const {
  if (!(mu_min > 0.0 && mu_min <= mu_start && mu_start <= mu_max)) {
    throw ConfigError(fmt::format("controller requires 0 < mu_min <= mu_start <= mu_max (got {}, {}, {})", mu_min,
                                  mu_start, mu_max));
  }
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError(fmt::format("conflict threshold tau must be in (0, 1), got {}", tau));
  if (!(lambda_ema > 0.0 && lambda_ema <= 1.0)) {
    throw ConfigError(fmt::format("EMA factor lambda must be in (0, 1], got {}", lambda_ema));
  }
  if (horizon <= 0) throw ConfigError(fmt::format("controller horizon T must be positive, got {}", horizon));
}

double braking_boost(double kappa, double tau) {
  if (kappa <= tau) return 0.0;
  return std::clamp((kappa - tau) / (1.0 - tau), 0.0, 1.0);
}

double target_mu(double mu_base, double beta, double mu_max) { return mu_base + beta * (mu_max - mu_base); }

SmoothnessController::SmoothnessController(ControllerConfig config) : config_(config), mu_(config.mu_start) {
  config_.validate();
}

double SmoothnessController::base_decay(std::int64_t t) const {
  if (t < 0) throw ContractError("controller time must be non-negative");
  if (!config_.decay) return config_.mu_start;
  const double progress = std::min(1.0, static_cast<double>(t) / static_cast<double>(config_.horizon));
  return config_.mu_start - (config_.mu_start - config_.mu_min) * progress;
}

ControllerTrace SmoothnessController::step(double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ContractError(fmt::format("conflict ratio {} outside [0, 1]", kappa));
  ControllerTrace trace;
  trace.t = t_;
  trace.kappa = kappa;
  trace.mu_base = base_decay(t_);
  trace.beta = config_.braking ? braking_boost(kappa, config_.tau) : 0.0;
  trace.mu_star = target_mu(trace.mu_base, trace.beta, config_.mu_max);
  const double lambda = config_.lambda_ema;
  mu_ = lambda == 1.0 ? trace.mu_star : (1.0 - lambda) * mu_ + lambda * trace.mu_star;
  trace.mu = mu_;
  ++t_;
  return trace;
}

void SmoothnessController::restore(std::int64_t t, double mu) {
  if (t < 0 || !std::isfinite(mu) || mu <= 0.0) {
    throw ContractError(fmt::format("invalid controller state t = {}, mu = {}", t, mu));
  }
  t_ = t;
  mu_ = mu;
}

}  // namespace pasta
