#include "pasta/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pasta/error.hpp"
#include "pasta/hexfloat.hpp"

namespace pasta {

namespace {

// Stream ids for the per-run random streams.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kActionStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kPcgradStream = 4;
constexpr std::uint64_t kEpisodeStream = 5;
constexpr std::uint64_t kEvalStream = 6;

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_finite(double v, const std::string& term) {
  if (!std::isfinite(v)) throw DivergenceError(term, fmt::format("non-finite value {}", v));
}

std::unique_ptr<Critic> make_critic(CriticArch arch, std::size_t input_dim, std::size_t m, std::size_t hidden,
                                    Rng& rng) {
  if (arch == CriticArch::kShared) return std::make_unique<SharedCritic>(input_dim, m, hidden, rng);
  return std::make_unique<BranchedCritic>(input_dim, m, hidden, rng);
}

PreferenceVector resolve_preference(const TrainConfig& cfg, std::size_t m) {
  if (cfg.preference.empty()) return PreferenceVector::uniform(m);
  if (cfg.preference.size() != m) {
    throw ConfigError(fmt::format("preference has {} weights but environment '{}' has {} objectives",
                                  cfg.preference.size(), cfg.environment.name, m));
  }
  return PreferenceVector(cfg.preference);
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kPasta:
      return "pasta";
    case Algorithm::kLinear:
      return "linear";
    case Algorithm::kTch:
      return "tch";
    case Algorithm::kFixedStch:
      return "fixed_stch";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "pasta") return Algorithm::kPasta;
  if (s == "linear") return Algorithm::kLinear;
  if (s == "tch") return Algorithm::kTch;
  if (s == "fixed_stch") return Algorithm::kFixedStch;
  throw ConfigError(fmt::format("unknown algorithm '{}' (expected pasta, linear, tch or fixed_stch)", s));
}

double clipped_objective(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

bool clip_gradient_active(double ratio, double advantage, double clip_eps) {
  return advantage >= 0.0 ? ratio <= 1.0 + clip_eps : ratio >= 1.0 - clip_eps;
}

void TrainConfig::validate() const {
  require(horizon > 0, "ppo.horizon must be positive");
  require(epochs > 0, "ppo.epochs must be positive");
  require(minibatch > 0, "ppo.minibatch must be positive");
  require(clip_eps > 0.0 && clip_eps < 1.0, fmt::format("ppo.clip_eps must be in (0, 1), got {}", clip_eps));
  require(c1 >= 0.0 && std::isfinite(c1), "ppo.c1 must be finite and >= 0");
  require(c2 >= 0.0 && std::isfinite(c2), "ppo.c2 must be finite and >= 0");
  require(gamma > 0.0 && gamma <= 1.0, "ppo.gamma must be in (0, 1]");
  require(lambda_gae >= 0.0 && lambda_gae <= 1.0, "ppo.lambda_gae must be in [0, 1]");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "ppo.learning_rate must be positive");
  require(hidden > 0, "ppo.hidden must be positive");
  require(iterations > 0, "run.iterations must be positive");
  require(mu_fixed > 0.0, "algorithm.mu_fixed must be positive");
  require(zeta > 1.0, fmt::format("algorithm.zeta must exceed 1, got {}", zeta));
  require(rho > 0.0 && rho < 1.0, fmt::format("algorithm.rho must be in (0, 1), got {}", rho));
  require(eval_interval > 0, "output.eval_interval must be positive");
  require(eval_episodes > 0, "output.eval_episodes must be positive");
  controller_config().validate();
  environment.validate();
  if (!preference.empty()) PreferenceVector{preference};
}

ControllerConfig TrainConfig::controller_config() const {
  ControllerConfig c;
  c.mu_start = mu_start;
  c.mu_min = mu_min;
  c.mu_max = mu_max;
  c.tau = tau;
  c.lambda_ema = lambda_ema;
  c.horizon = iterations;
  c.decay = controller_decay;
  c.braking = controller_braking;
  return c;
}

Trainer::Trainer(TrainConfig config)
    : config_((config.validate(), std::move(config))),
      env_(make_environment(config_.environment)),
      m_(env_->objective_count()),
      controller_(config_.controller_config()),
      normalizer_(m_),
      action_rng_(config_.seed, kActionStream),
      shuffle_rng_(config_.seed, kShuffleStream),
      pcgrad_rng_(config_.seed, kPcgradStream),
      episode_seeds_(config_.seed, kEpisodeStream) {
  w_ = resolve_preference(config_, m_);
  Rng init(config_.seed, kInitStream);
  actor_ = GaussianActor(env_->observation_dim(), m_, env_->action_dim(), config_.hidden, init);
  critic_ = make_critic(config_.critic, env_->observation_dim() + m_, m_, config_.hidden, init);
  AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  actor_adam_ = AdamState(actor_.parameter_count(), adam);
  critic_adam_ = AdamState(critic_->parameter_count(), adam);
  utopia_ = utopia_point(m_, config_.zeta);
  r_bar_.assign(m_, 0.0);
  eval_seed_base_ = Rng(config_.seed, kEvalStream).next_seed();
  obs_ = env_->reset(next_episode_seed());
  episode_return_.assign(m_, 0.0);
}

RolloutBatch Trainer::collect() {
  const auto horizon = static_cast<std::size_t>(config_.horizon);
  RolloutBatch batch(m_);
  batch.values = StepTable(0, m_);
  batch.next_values = StepTable(0, m_);
  const std::span<const double> w = w_.values();
  std::vector<std::vector<double>> bootstrap(horizon);  // V(s') for truncated steps
  for (std::size_t t = 0; t < horizon; ++t) {
    GaussianActor::Sample sample = actor_.act(obs_, w, action_rng_);
    const std::vector<double> v = critic_->value_vector(obs_, w);
    StepResult res = env_->step(sample.action);
    for (double r : res.reward) check_finite(r, "environment reward");

    batch.states.push_back(obs_);
    batch.raw_actions.push_back(std::move(sample.raw_action));
    batch.actions.push_back(std::move(sample.action));
    batch.old_log_probs.push_back(sample.log_prob);
    batch.rewards.append_row(res.reward);
    batch.values.append_row(v);
    batch.terminals.push_back(res.terminated ? 1 : 0);
    batch.dones.push_back(res.done() ? 1 : 0);
    for (std::size_t i = 0; i < m_; ++i) episode_return_[i] += res.reward[i];

    if (res.done()) {
      if (!res.terminated) bootstrap[t] = critic_->value_vector(res.observation, w);
      batch.episodic_returns.push_back(episode_return_);
      std::fill(episode_return_.begin(), episode_return_.end(), 0.0);
      obs_ = env_->reset(next_episode_seed());
    } else {
      obs_ = std::move(res.observation);
    }
  }
  const std::vector<double> last_value = critic_->value_vector(obs_, w);
  const std::vector<double> zeros(m_, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    if (batch.terminals[t]) {
      batch.next_values.append_row(zeros);
    } else if (batch.dones[t]) {
      batch.next_values.append_row(bootstrap[t]);
    } else if (t + 1 < horizon) {
      batch.next_values.append_row(batch.values.row(t + 1));
    } else {
      batch.next_values.append_row(last_value);
    }
  }
  return batch;
}

std::vector<double> Trainer::critic_weights(std::span<const double> eta) const {
  const bool attention = config_.algorithm == Algorithm::kPasta || config_.algorithm == Algorithm::kFixedStch;
  if (attention && config_.critic_weighted) return {eta.begin(), eta.end()};
  return std::vector<double>(m_, 1.0 / static_cast<double>(m_));
}

double Trainer::critic_loss(const RolloutBatch& batch, std::span<const std::size_t> indices,
                            std::span<const double> weights, std::span<double> grad) const {
  if (weights.size() != m_) throw ContractError("critic weights must have one entry per objective");
  const double n = static_cast<double>(indices.size());
  std::vector<double> values(m_);
  std::vector<double> out_grad(m_);
  double loss = 0.0;
  for (std::size_t idx : indices) {
    const auto& s = batch.states[idx];
    values = critic_->value_vector(s, w_.values());
    for (std::size_t i = 0; i < m_; ++i) {
      const double err = values[i] - batch.value_targets(idx, i);
      loss += weights[i] * err * err;
      out_grad[i] = config_.c1 * 2.0 * weights[i] * err / n;
    }
    if (!grad.empty()) critic_->accumulate_gradient(s, w_.values(), out_grad, grad, values);
  }
  loss /= n;
  check_finite(loss, "critic value loss");
  return loss;
}

ActorDirection Trainer::compute_actor_direction(const RolloutBatch& batch, std::span<const std::size_t> indices,
                                                std::span<const double> eta, std::size_t tch_index,
                                                Rng& rng) const {
  const std::size_t p = actor_.parameter_count();
  const double n = static_cast<double>(indices.size());
  const std::span<const double> w = w_.values();
  ActorDirection out;
  out.objective_gradients.grads.assign(m_, std::vector<double>(p, 0.0));
  out.clip_objective.assign(m_, 0.0);
  std::vector<double> scalar_grad;
  if (config_.algorithm == Algorithm::kLinear) scalar_grad.assign(p, 0.0);

  std::vector<double> glogp(p);
  for (std::size_t idx : indices) {
    const double logp = actor_.log_prob_gradient(batch.states[idx], w, batch.raw_actions[idx], glogp);
    const double ratio = std::exp(logp - batch.old_log_probs[idx]);
    check_finite(ratio, "policy ratio");
    for (std::size_t i = 0; i < m_; ++i) {
      const double adv = batch.normalized_advantages(idx, i);
      out.clip_objective[i] += clipped_objective(ratio, adv, config_.clip_eps) / n;
      if (!clip_gradient_active(ratio, adv, config_.clip_eps)) continue;
      const double c = adv * ratio / n;
      auto& g = out.objective_gradients.grads[i];
      for (std::size_t k = 0; k < p; ++k) g[k] += c * glogp[k];
    }
    if (config_.algorithm == Algorithm::kLinear) {
      double adv = 0.0;
      for (std::size_t i = 0; i < m_; ++i) adv += w[i] * batch.normalized_advantages(idx, i);
      if (clip_gradient_active(ratio, adv, config_.clip_eps)) {
        const double c = adv * ratio / n;
        for (std::size_t k = 0; k < p; ++k) scalar_grad[k] += c * glogp[k];
      }
    }
  }
  for (std::size_t i = 0; i < m_; ++i) check_finite(out.clip_objective[i], fmt::format("clip objective {}", i));

  const bool projects = (config_.algorithm == Algorithm::kPasta || config_.algorithm == Algorithm::kFixedStch) &&
                        !config_.no_pcgrad;
  if (projects) {
    ProjectionResult pr = project_conflicts(out.objective_gradients, rng);
    out.projected = std::move(pr.projected);
    out.kappa = pr.kappa;
  } else {
    out.projected = out.objective_gradients;
    out.kappa = conflict_ratio(out.objective_gradients);
  }

  switch (config_.algorithm) {
    case Algorithm::kPasta:
    case Algorithm::kFixedStch:
      out.direction = summed_update_direction(out.projected, config_.weighted_pcgrad ? SumMode::kWeightedByEta : SumMode::kSum,
                                              eta);
      break;
    case Algorithm::kLinear:
      out.direction = std::move(scalar_grad);
      break;
    case Algorithm::kTch: {
      if (tch_index >= m_) throw ContractError("TCH objective index out of range");
      out.direction = out.objective_gradients.grads[tch_index];
      for (double& v : out.direction) v *= w[tch_index];
      break;
    }
  }
  actor_.add_entropy_gradient(config_.c2, out.direction);
  return out;
}

bool Trainer::evaluation_due(std::int64_t iteration) const {
  return iteration == 0 || iteration % config_.eval_interval == 0 || iteration == config_.iterations;
}

EvaluationResult Trainer::evaluate(int episodes) const {
  if (episodes <= 0) throw ConfigError("evaluation needs at least one episode");
  auto env = make_environment(config_.environment);
  EvaluationResult res;
  res.episodes = episodes;
  res.mean_returns.assign(m_, 0.0);
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> obs = env->reset(eval_seed_base_ + static_cast<std::uint64_t>(e));
    while (true) {
      StepResult r = env->step(actor_.act_deterministic(obs, w_.values()));
      for (std::size_t i = 0; i < m_; ++i) res.mean_returns[i] += r.reward[i];
      if (r.done()) break;
      obs = std::move(r.observation);
    }
  }
  for (double& v : res.mean_returns) v /= static_cast<double>(episodes);
  return res;
}

IterationReport Trainer::run_iteration() {
  IterationReport report;
  report.iteration = iteration_ + 1;

  RolloutBatch batch = collect();
  trace(kTraceCollect);
  compute_gae(batch, config_.gamma, config_.lambda_gae);
  normalize_advantages(batch);
  trace(kTraceAdvantages);

  report.episodes_completed = batch.episodic_returns.size();
  report.mean_episode_returns.assign(m_, 0.0);
  if (!batch.episodic_returns.empty()) {
    r_bar_ = normalizer_.update_and_normalize(batch.episodic_returns);
    for (const auto& r : batch.episodic_returns) {
      for (std::size_t i = 0; i < m_; ++i) report.mean_episode_returns[i] += r[i];
    }
    for (double& v : report.mean_episode_returns) v /= static_cast<double>(batch.episodic_returns.size());
  }
  report.normalized_returns = r_bar_;
  trace(kTraceNormalize);

  std::vector<double> eta(m_, 1.0 / static_cast<double>(m_));
  std::size_t tch_index = 0;
  switch (config_.algorithm) {
    case Algorithm::kPasta:
      report.controller = controller_.step(last_kappa_);
      report.mu = controller_.mu();
      trace(kTraceController);
      break;
    case Algorithm::kFixedStch:
      report.mu = config_.mu_fixed;
      break;
    case Algorithm::kTch:
      tch_index = tch_worst_index(r_bar_, w_.values(), utopia_).index;
      report.tch_index = tch_index;
      break;
    case Algorithm::kLinear:
      break;
  }
  if (report.mu) {
    AttentionWeights att = compute_attention(r_bar_, w_.values(), utopia_, *report.mu, config_.rho);
    report.delta = att.delta;
    report.eta = att.eta;
    eta = att.eta;
    trace(kTraceAttention);
  }
  const std::vector<double> weights = critic_weights(eta);

  const std::size_t t_len = batch.size();
  const auto mb = static_cast<std::size_t>(config_.minibatch);
  std::vector<std::size_t> order(t_len);
  std::vector<double> kappas;
  std::vector<double> critic_grad(critic_->parameter_count());
  std::vector<double> critic_params;
  std::vector<double> actor_params;
  report.clip_objective.assign(m_, 0.0);
  std::size_t updates = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng_.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < t_len; start += mb) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(mb, t_len - start));

      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      report.value_loss += critic_loss(batch, idx, weights, critic_grad);
      critic_params = critic_->parameters();
      adam_step(critic_params, critic_grad, critic_adam_, false, "critic");
      critic_->assign_parameters(critic_params);
      trace(kTraceCritic);

      ActorDirection dir = compute_actor_direction(batch, idx, eta, tch_index, pcgrad_rng_);
      for (std::size_t i = 0; i < m_; ++i) report.clip_objective[i] += dir.clip_objective[i];
      actor_params = actor_.parameters();
      adam_step(actor_params, dir.direction, actor_adam_, true, "actor");
      actor_.assign_parameters(actor_params);
      kappas.push_back(dir.kappa);
      trace(kTraceActor);
      ++updates;
    }
  }
  report.value_loss /= static_cast<double>(updates);
  for (double& v : report.clip_objective) v /= static_cast<double>(updates);
  report.entropy = actor_.entropy();
  check_finite(report.entropy, "entropy");

  last_kappa_ = std::accumulate(kappas.begin(), kappas.end(), 0.0) / static_cast<double>(kappas.size());
  report.kappa = last_kappa_;
  trace(kTraceKappa);

  ++iteration_;
  if (evaluation_due(iteration_)) report.evaluation = evaluate(config_.eval_episodes);
  return report;
}

void Trainer::save_checkpoint(const std::string& path) const {
  Checkpoint ckpt;
  ckpt.set_meta("algorithm", to_string(config_.algorithm));
  ckpt.set_meta("environment", config_.environment.name);
  ckpt.set_meta("objectives", std::to_string(m_));
  ckpt.set_meta("state_dim", std::to_string(env_->observation_dim()));
  ckpt.set_meta("action_dim", std::to_string(env_->action_dim()));
  ckpt.set_meta("preference", w_.to_string());
  ckpt.set_meta("critic", critic_->kind());
  ckpt.set_meta("iteration", std::to_string(iteration_));
  ckpt.set_meta("controller_t", std::to_string(controller_.t()));
  ckpt.set_meta("controller_mu", format_hex(controller_.mu()));
  ckpt.set_meta("last_kappa", format_hex(last_kappa_));
  ckpt.set_meta("normalizer_initialized", normalizer_.initialized() ? "1" : "0");
  actor_.save(ckpt, "actor");
  critic_->save(ckpt, "critic");
  ckpt.put_adam("actor_adam", actor_adam_);
  ckpt.put_adam("critic_adam", critic_adam_);
  ckpt.put("normalizer_min", {m_}, normalizer_.running_min());
  ckpt.put("normalizer_max", {m_}, normalizer_.running_max());
  ckpt.put("r_bar", {m_}, r_bar_);
  ckpt.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  auto expect = [&](const std::string& key, const std::string& value) {
    if (ckpt.meta(key) != value) {
      throw ConfigError(fmt::format("checkpoint '{}' has {} = {}, this run has {}", path, key, ckpt.meta(key), value));
    }
  };
  expect("environment", config_.environment.name);
  expect("objectives", std::to_string(m_));
  expect("state_dim", std::to_string(env_->observation_dim()));
  expect("action_dim", std::to_string(env_->action_dim()));
  expect("critic", critic_->kind());
  actor_.load(ckpt, "actor");
  critic_->load(ckpt, "critic");
  actor_adam_ = ckpt.get_adam("actor_adam");
  critic_adam_ = ckpt.get_adam("critic_adam");
  const auto& mn = ckpt.get("normalizer_min").values;
  const auto& mx = ckpt.get("normalizer_max").values;
  normalizer_.restore(mn, mx, ckpt.meta("normalizer_initialized") == "1");
  r_bar_ = ckpt.get("r_bar").values;
  iteration_ = std::stoll(ckpt.meta("iteration"));
  last_kappa_ = parse_hex(ckpt.meta("last_kappa"), "checkpoint");
  controller_.restore(std::stoll(ckpt.meta("controller_t")), parse_hex(ckpt.meta("controller_mu"), "checkpoint"));
}

}  // namespace pasta
