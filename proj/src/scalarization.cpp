#include "pasta/scalarization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pasta/error.hpp"

namespace pasta {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  if (a.size() != b.size() || a.size() != c.size() || a.empty()) {
    throw ContractError(fmt::format("objective vectors must be non-empty and equally long ({}, {}, {})", a.size(),
                                    b.size(), c.size()));
  }
}

void check_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError(fmt::format("smoothing mu must be positive, got {}", mu));
}

std::vector<double> scaled_deviations(std::span<const double> r, std::span<const double> w,
                                      std::span<const double> z, double mu) {
  std::vector<double> y(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) y[i] = w[i] * (z[i] - r[i]) / mu;
  return y;
}

}  // namespace

PreferenceVector::PreferenceVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ConfigError("preference vector is empty");
  double sum = 0.0;
  for (double v : weights_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError(fmt::format("preference ({}) is not on the simplex: weights must be non-negative",
                                    fmt::join(weights_, ", ")));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw ConfigError(fmt::format("preference ({}) is not on the simplex: weights sum to {:.12g}, expected 1",
                                  fmt::join(weights_, ", "), sum));
  }
}

PreferenceVector PreferenceVector::uniform(std::size_t m) {
  if (m == 0) throw ConfigError("preference vector is empty");
  return PreferenceVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

std::string PreferenceVector::to_string() const { return fmt::format("{:.17g}", fmt::join(weights_, ",")); }

std::vector<double> ReturnNormalizer::update_and_normalize(std::span<const std::vector<double>> batch_returns) {
  if (batch_returns.empty()) throw ContractError("return normalizer needs a non-empty batch");
  const std::size_t m = min_.size();
  std::vector<double> mean(m, 0.0);
  for (const auto& r : batch_returns) {
    if (r.size() != m) throw ContractError("return vector length mismatch");
    for (std::size_t i = 0; i < m; ++i) {
      if (!initialized_) {
        min_[i] = r[i];
        max_[i] = r[i];
      } else {
        min_[i] = std::min(min_[i], r[i]);
        max_[i] = std::max(max_[i], r[i]);
      }
      mean[i] += r[i];
    }
    initialized_ = true;
  }
  for (double& v : mean) v /= static_cast<double>(batch_returns.size());
  return normalize(mean);
}

void ReturnNormalizer::restore(std::vector<double> min, std::vector<double> max, bool initialized) {
  if (min.size() != min_.size() || max.size() != max_.size()) throw ContractError("normalizer state size mismatch");
  min_ = std::move(min);
  max_ = std::move(max);
  initialized_ = initialized;
}

std::vector<double> ReturnNormalizer::normalize(std::span<const double> returns) const {
  if (returns.size() != min_.size()) throw ContractError("return vector length mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    out[i] = std::clamp((returns[i] - min_[i]) / (max_[i] - min_[i] + kEpsilon), 0.0, 1.0);
  }
  return out;
}

std::vector<double> utopia_point(std::size_t m, double zeta) {
  if (!(zeta > 1.0)) throw ConfigError(fmt::format("utopia zeta must exceed 1, got {}", zeta));
  return std::vector<double>(m, zeta);
}

double linear_scalarize(std::span<const double> returns, std::span<const double> w) {
  if (returns.size() != w.size()) throw ContractError("preference/return length mismatch");
  return std::inner_product(returns.begin(), returns.end(), w.begin(), 0.0);
}

TchSelection tch_worst_index(std::span<const double> returns, std::span<const double> w,
                             std::span<const double> utopia) {
  check_lengths(returns, w, utopia);
  TchSelection sel;
  sel.deviations.resize(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    sel.deviations[i] = w[i] * (utopia[i] - returns[i]);
    if (sel.deviations[i] > sel.deviations[sel.index]) sel.index = i;
  }
  return sel;
}

double stch_scalarize(std::span<const double> returns, std::span<const double> w, std::span<const double> utopia,
                      double mu) {
  check_lengths(returns, w, utopia);
  check_mu(mu);
  // Shift by the unscaled maximum so -S >= max_i y_i holds exactly in floating point.
  const auto y = scaled_deviations(returns, w, utopia, 1.0);
  const double top = *std::max_element(y.begin(), y.end());
  double sum = 0.0;
  for (double v : y) sum += std::exp((v - top) / mu);
  return -(top + mu * std::log(sum));
}

std::vector<double> stch_attention(std::span<const double> returns, std::span<const double> w,
                                   std::span<const double> utopia, double mu) {
  check_lengths(returns, w, utopia);
  check_mu(mu);
  auto y = scaled_deviations(returns, w, utopia, mu);
  const double top = *std::max_element(y.begin(), y.end());
  double sum = 0.0;
  for (double& v : y) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : y) v /= sum;
  return y;
}

std::vector<double> maintenance_mix(std::span<const double> delta, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError(fmt::format("maintenance rate rho must be in (0, 1), got {}", rho));
  const double floor = rho / static_cast<double>(delta.size());
  std::vector<double> eta(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) eta[i] = (1.0 - rho) * delta[i] + floor;
  return eta;
}

AttentionWeights compute_attention(std::span<const double> normalized_returns, std::span<const double> w,
                                   std::span<const double> utopia, double mu, double rho) {
  AttentionWeights att;
  att.delta = stch_attention(normalized_returns, w, utopia, mu);
  att.eta = maintenance_mix(att.delta, rho);
  att.mu_used = mu;
  att.rho = rho;
  return att;
}

}  // namespace pasta
