#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pasta/nn.hpp"
#include "pasta/rng.hpp"

namespace pasta {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// [s, w]
std::vector<double> concat_input(std::span<const double> state, std::span<const double> preference);

// Diagonal Gaussian policy over [0,1]^d. The mean comes from a Tanh MLP with a
// Sigmoid output layer; log_std is a state-independent parameter vector.
//
// Flat parameter layout: network parameters followed by log_std.
class GaussianActor {
 public:
  struct Sample {
    std::vector<double> action;      // clamped to [0,1]^d
    std::vector<double> raw_action;  // pre-clamp draw
    double log_prob = 0.0;           // density of raw_action
  };

  struct LogProbEntropy {
    double log_prob = 0.0;
    double entropy = 0.0;
  };

  GaussianActor() = default;
  GaussianActor(std::size_t state_dim, std::size_t preference_dim, std::size_t action_dim, std::size_t hidden,
                Rng& init_rng);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t preference_dim() const { return preference_dim_; }
  std::size_t action_dim() const { return log_std_.size(); }
  std::size_t parameter_count() const { return net_.parameter_count() + log_std_.size(); }

  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }
  std::span<const double> log_std() const { return log_std_; }
  void set_log_std(std::span<const double> values);

  std::vector<double> parameters() const;
  void assign_parameters(std::span<const double> flat);

  std::vector<double> mean(std::span<const double> state, std::span<const double> preference) const;

  Sample act(std::span<const double> state, std::span<const double> preference, Rng& rng) const;
  // Deterministic evaluation action (the mean, already inside (0,1)).
  std::vector<double> act_deterministic(std::span<const double> state, std::span<const double> preference) const;

  LogProbEntropy log_prob_and_entropy(std::span<const double> state, std::span<const double> preference,
                                      std::span<const double> raw_action) const;

  // Writes grad_theta log pi(raw_action | s, w) into grad (overwritten) and
  // returns the log density.
  double log_prob_gradient(std::span<const double> state, std::span<const double> preference,
                           std::span<const double> raw_action, std::span<double> grad) const;

  double entropy() const;
  // Adds coef * grad_theta entropy into grad. Only log_std entries change.
  void add_entropy_gradient(double coef, std::span<double> grad) const;

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  void load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  void check_finite(std::span<const double> values) const;

  std::size_t state_dim_ = 0;
  std::size_t preference_dim_ = 0;
  Mlp net_;
  std::vector<double> log_std_;
};

// Vector-valued critic V(s, w) in R^m. Branched and shared variants expose
// the same interface.
class Critic {
 public:
  virtual ~Critic() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t objective_count() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void assign_parameters(std::span<const double> flat) = 0;

  virtual std::vector<double> value_vector(std::span<const double> state,
                                           std::span<const double> preference) const = 0;

  // Evaluates V and adds d(output_grad . V)/d(phi) into grad. `values` receives V.
  virtual void accumulate_gradient(std::span<const double> state, std::span<const double> preference,
                                   std::span<const double> output_grad, std::span<double> grad,
                                   std::span<double> values) const = 0;

  virtual void save(Checkpoint& ckpt, const std::string& prefix) const = 0;
  virtual void load(const Checkpoint& ckpt, const std::string& prefix) = 0;
  virtual std::unique_ptr<Critic> clone() const = 0;
};

// Shared Tanh trunk with m independent heads (Tanh hidden layer, scalar
// linear output). Flat layout: trunk, then head 0, ..., head m-1.
class BranchedCritic final : public Critic {
 public:
  BranchedCritic(std::size_t input_dim, std::size_t objectives, std::size_t hidden, Rng& init_rng);

  std::string kind() const override { return "branched"; }
  std::size_t objective_count() const override { return heads_.size(); }
  std::size_t input_dim() const override { return trunk_.input_dim(); }
  std::size_t parameter_count() const override;
  std::vector<double> parameters() const override;
  void assign_parameters(std::span<const double> flat) override;
  std::vector<double> value_vector(std::span<const double> state, std::span<const double> preference) const override;
  void accumulate_gradient(std::span<const double> state, std::span<const double> preference,
                           std::span<const double> output_grad, std::span<double> grad,
                           std::span<double> values) const override;
  void save(Checkpoint& ckpt, const std::string& prefix) const override;
  void load(const Checkpoint& ckpt, const std::string& prefix) override;
  std::unique_ptr<Critic> clone() const override { return std::make_unique<BranchedCritic>(*this); }

  const Mlp& trunk() const { return trunk_; }
  const Mlp& head(std::size_t i) const { return heads_.at(i); }
  Mlp& head(std::size_t i) { return heads_.at(i); }
  // Offset of head i inside the flat layout.
  std::size_t head_offset(std::size_t i) const;

 private:
  Mlp trunk_;
  std::vector<Mlp> heads_;
};

// Shared trunk plus a single head emitting all m values. Flat layout: trunk, head.
class SharedCritic final : public Critic {
 public:
  SharedCritic(std::size_t input_dim, std::size_t objectives, std::size_t hidden, Rng& init_rng);

  std::string kind() const override { return "shared"; }
  std::size_t objective_count() const override { return head_.output_dim(); }
  std::size_t input_dim() const override { return trunk_.input_dim(); }
  std::size_t parameter_count() const override { return trunk_.parameter_count() + head_.parameter_count(); }
  std::vector<double> parameters() const override;
  void assign_parameters(std::span<const double> flat) override;
  std::vector<double> value_vector(std::span<const double> state, std::span<const double> preference) const override;
  void accumulate_gradient(std::span<const double> state, std::span<const double> preference,
                           std::span<const double> output_grad, std::span<double> grad,
                           std::span<double> values) const override;
  void save(Checkpoint& ckpt, const std::string& prefix) const override;
  void load(const Checkpoint& ckpt, const std::string& prefix) override;
  std::unique_ptr<Critic> clone() const override { return std::make_unique<SharedCritic>(*this); }

 private:
  Mlp trunk_;
  Mlp head_;
};

}  // namespace pasta
