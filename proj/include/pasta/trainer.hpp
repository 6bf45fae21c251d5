#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pasta/advantage.hpp"
#include "pasta/controller.hpp"
#include "pasta/environments.hpp"
#include "pasta/nn.hpp"
#include "pasta/policy.hpp"
#include "pasta/rng.hpp"
#include "pasta/scalarization.hpp"
#include "pasta/surgery.hpp"

namespace pasta {

enum class Algorithm { kPasta, kLinear, kTch, kFixedStch };
enum class CriticArch { kBranched, kShared };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kPasta;
  double mu_fixed = 10.0;  // FixedSTCH only

  std::int64_t horizon = 2048;
  int epochs = 10;
  int minibatch = 64;
  double clip_eps = 0.2;
  double c1 = 0.5;
  double c2 = 0.01;
  double gamma = 0.99;
  double lambda_gae = 0.95;
  double learning_rate = 3e-4;
  std::size_t hidden = 64;

  std::int64_t iterations = 100;
  std::uint64_t seed = 1;
  std::vector<double> preference;  // empty means uniform

  bool no_pcgrad = false;
  bool weighted_pcgrad = false;
  CriticArch critic = CriticArch::kBranched;
  bool critic_weighted = true;

  // Controller; horizon T is taken from `iterations`.
  double mu_start = 10.0;
  double mu_min = 0.05;
  double mu_max = 10.0;
  double tau = 0.4;
  double lambda_ema = 0.05;
  bool controller_decay = true;
  bool controller_braking = true;

  double zeta = kDefaultZeta;
  double rho = kDefaultRho;

  int eval_interval = 10;
  int eval_episodes = 8;

  EnvironmentConfig environment;

  // Throws ConfigError on any invalid value.
  void validate() const;
  ControllerConfig controller_config() const;
};

struct EvaluationResult {
  std::vector<double> mean_returns;
  int episodes = 0;
};

struct IterationReport {
  std::int64_t iteration = 0;
  double kappa = 0.0;                    // aggregate over this iteration's minibatches
  std::optional<double> mu;              // smoothness used this iteration (PASTA, FixedSTCH)
  std::optional<ControllerTrace> controller;
  std::vector<double> normalized_returns;  // r-bar
  std::vector<double> delta;
  std::vector<double> eta;
  std::optional<std::size_t> tch_index;
  std::vector<double> mean_episode_returns;  // training episodes completed this iteration
  std::size_t episodes_completed = 0;
  std::vector<double> clip_objective;  // per objective, mean over minibatches
  double value_loss = 0.0;             // mean over minibatches, before the c1 factor
  double entropy = 0.0;
  std::optional<EvaluationResult> evaluation;
};

// Per-minibatch actor update pieces, exposed for tests.
struct ActorDirection {
  GradientSet objective_gradients;  // g_i before projection
  GradientSet projected;            // after projection (copy of g_i when skipped)
  std::vector<double> direction;    // ascent direction including the entropy term
  std::vector<double> clip_objective;
  double kappa = 0.0;
};

// Event names passed to the trace hook.
inline constexpr std::string_view kTraceCollect = "collect";
inline constexpr std::string_view kTraceAdvantages = "advantages";
inline constexpr std::string_view kTraceNormalize = "normalize_returns";
inline constexpr std::string_view kTraceController = "controller";
inline constexpr std::string_view kTraceAttention = "attention";
inline constexpr std::string_view kTraceCritic = "critic_update";
inline constexpr std::string_view kTraceActor = "actor_update";
inline constexpr std::string_view kTraceKappa = "kappa_aggregate";

class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return config_; }
  std::size_t objective_count() const { return m_; }
  std::int64_t iteration() const { return iteration_; }
  double last_kappa() const { return last_kappa_; }
  std::span<const double> preference() const { return w_.values(); }
  std::span<const double> normalized_returns() const { return r_bar_; }
  const GaussianActor& actor() const { return actor_; }
  GaussianActor& actor() { return actor_; }
  const Critic& critic() const { return *critic_; }
  const SmoothnessController& controller() const { return controller_; }

  void set_trace_hook(std::function<void(std::string_view)> hook) { trace_ = std::move(hook); }

  // Collects, updates, and evaluates when scheduled.
  IterationReport run_iteration();

  // Deterministic (mean action) episodes on a separate environment. The seed
  // set is fixed per run so every evaluation sees the same episodes.
  EvaluationResult evaluate(int episodes) const;
  bool evaluation_due(std::int64_t iteration) const;

  // Rollout of `horizon` steps with the current policy, not yet finalized.
  RolloutBatch collect();

  // Critic loss weights for the current iteration's attention.
  std::vector<double> critic_weights(std::span<const double> eta) const;

  // Actor ascent direction for one minibatch. `eta` is only read by the
  // weighted-PCGrad ablation; `tch_index` only by the TCH baseline.
  ActorDirection compute_actor_direction(const RolloutBatch& batch, std::span<const std::size_t> indices,
                                         std::span<const double> eta, std::size_t tch_index, Rng& rng) const;

  // Mean of weights_i (V_i - y_i)^2 summed over objectives; fills the critic
  // gradient of c1 times that loss when `grad` is non-empty.
  double critic_loss(const RolloutBatch& batch, std::span<const std::size_t> indices,
                     std::span<const double> weights, std::span<double> grad) const;

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  void trace(std::string_view event) const {
    if (trace_) trace_(event);
  }
  std::uint64_t next_episode_seed() { return episode_seeds_.next_seed(); }

  TrainConfig config_;
  PreferenceVector w_;
  std::unique_ptr<Environment> env_;
  std::size_t m_ = 0;
  GaussianActor actor_;
  std::unique_ptr<Critic> critic_;
  AdamState actor_adam_;
  AdamState critic_adam_;
  SmoothnessController controller_;
  ReturnNormalizer normalizer_;
  std::vector<double> utopia_;
  std::vector<double> r_bar_;
  double last_kappa_ = 0.0;
  std::int64_t iteration_ = 0;

  Rng action_rng_;
  Rng shuffle_rng_;
  Rng pcgrad_rng_;
  Rng episode_seeds_;
  std::uint64_t eval_seed_base_ = 0;

  std::vector<double> obs_;
  std::vector<double> episode_return_;

  std::function<void(std::string_view)> trace_;
};

// min(ratio A, clip(ratio, 1 - eps, 1 + eps) A)
double clipped_objective(double ratio, double advantage, double clip_eps);

// True when the unclipped branch is selected, so the surrogate's gradient
// is A * ratio * grad log pi rather than zero.
bool clip_gradient_active(double ratio, double advantage, double clip_eps);

}  // namespace pasta
