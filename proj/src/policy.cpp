#include "pasta/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

std::vector<LayerShape> tanh_stack(std::size_t in, std::size_t hidden, std::size_t layers) {
  std::vector<LayerShape> shapes;
  for (std::size_t l = 0; l < layers; ++l) shapes.push_back({l == 0 ? in : hidden, hidden, Activation::kTanh});
  return shapes;
}

void check_span(std::span<double> grad, std::size_t expected, const char* what) {
  if (grad.size() != expected) {
    throw ContractError(fmt::format("{} gradient buffer has {} entries, expected {}", what, grad.size(), expected));
  }
}

}  // namespace

std::vector<double> concat_input(std::span<const double> state, std::span<const double> preference) {
  std::vector<double> x;
  x.reserve(state.size() + preference.size());
  x.insert(x.end(), state.begin(), state.end());
  x.insert(x.end(), preference.begin(), preference.end());
  return x;
}

GaussianActor::GaussianActor(std::size_t state_dim, std::size_t preference_dim, std::size_t action_dim,
                             std::size_t hidden, Rng& init_rng)
    : state_dim_(state_dim), preference_dim_(preference_dim) {
  auto shapes = tanh_stack(state_dim + preference_dim, hidden, 2);
  shapes.push_back({hidden, action_dim, Activation::kSigmoid});
  net_ = Mlp(shapes);
  net_.init_uniform(init_rng);
  log_std_.assign(action_dim, std::log(0.5));
}

void GaussianActor::set_log_std(std::span<const double> values) {
  if (values.size() != log_std_.size()) throw ContractError("log_std length mismatch");
  for (std::size_t d = 0; d < values.size(); ++d) log_std_[d] = std::clamp(values[d], kLogStdMin, kLogStdMax);
}

std::vector<double> GaussianActor::parameters() const {
  std::vector<double> flat(net_.parameters().begin(), net_.parameters().end());
  flat.insert(flat.end(), log_std_.begin(), log_std_.end());
  return flat;
}

void GaussianActor::assign_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ContractError(fmt::format("actor expects {} parameters, got {}", parameter_count(), flat.size()));
  }
  net_.assign(flat.first(net_.parameter_count()));
  set_log_std(flat.subspan(net_.parameter_count()));
}

void GaussianActor::check_finite(std::span<const double> values) const {
  for (double v : values) {
    if (!std::isfinite(v)) throw DivergenceError("actor", "non-finite policy mean");
  }
}

std::vector<double> GaussianActor::mean(std::span<const double> state, std::span<const double> preference) const {
  if (state.size() != state_dim_ || preference.size() != preference_dim_) {
    throw ConfigError(fmt::format("actor input split is ({}, {}), got ({}, {})", state_dim_, preference_dim_,
                                  state.size(), preference.size()));
  }
  auto mu = net_.predict(concat_input(state, preference));
  check_finite(mu);
  return mu;
}

GaussianActor::Sample GaussianActor::act(std::span<const double> state, std::span<const double> preference,
                                         Rng& rng) const {
  const auto mu = mean(state, preference);
  Sample s;
  s.raw_action.resize(mu.size());
  s.action.resize(mu.size());
  s.log_prob = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double sigma = std::exp(log_std_[d]);
    const double z = rng.normal();
    s.raw_action[d] = mu[d] + sigma * z;
    s.action[d] = std::clamp(s.raw_action[d], 0.0, 1.0);
    s.log_prob += -0.5 * z * z - log_std_[d] - kHalfLog2Pi;
  }
  return s;
}

std::vector<double> GaussianActor::act_deterministic(std::span<const double> state,
                                                     std::span<const double> preference) const {
  auto mu = mean(state, preference);
  for (double& v : mu) v = std::clamp(v, 0.0, 1.0);
  return mu;
}

GaussianActor::LogProbEntropy GaussianActor::log_prob_and_entropy(std::span<const double> state,
                                                                  std::span<const double> preference,
                                                                  std::span<const double> raw_action) const {
  if (raw_action.size() != action_dim()) throw ConfigError("action dimension mismatch");
  const auto mu = mean(state, preference);
  LogProbEntropy out;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double z = (raw_action[d] - mu[d]) / std::exp(log_std_[d]);
    out.log_prob += -0.5 * z * z - log_std_[d] - kHalfLog2Pi;
  }
  out.entropy = entropy();
  return out;
}

double GaussianActor::log_prob_gradient(std::span<const double> state, std::span<const double> preference,
                                        std::span<const double> raw_action, std::span<double> grad) const {
  check_span(grad, parameter_count(), "actor");
  if (raw_action.size() != action_dim()) throw ConfigError("action dimension mismatch");
  if (state.size() != state_dim_ || preference.size() != preference_dim_) {
    throw ConfigError("actor input dimension mismatch");
  }
  const Tape tape = net_.forward(concat_input(state, preference));
  const auto mu = tape.output();
  check_finite(mu);

  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> dmean(mu.size());
  double log_prob = 0.0;
  const std::size_t net_params = net_.parameter_count();
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double inv_var = std::exp(-2.0 * log_std_[d]);
    const double diff = raw_action[d] - mu[d];
    const double z2 = diff * diff * inv_var;
    log_prob += -0.5 * z2 - log_std_[d] - kHalfLog2Pi;
    dmean[d] = diff * inv_var;
    grad[net_params + d] = z2 - 1.0;
  }
  net_.backward(tape, dmean, grad.first(net_params));
  return log_prob;
}

double GaussianActor::entropy() const {
  double h = 0.0;
  for (double ls : log_std_) h += kHalfLog2PiE + ls;
  return h;
}

void GaussianActor::add_entropy_gradient(double coef, std::span<double> grad) const {
  check_span(grad, parameter_count(), "actor");
  const std::size_t net_params = net_.parameter_count();
  for (std::size_t d = 0; d < log_std_.size(); ++d) grad[net_params + d] += coef;
}

void GaussianActor::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_mlp(prefix + ".net", net_);
  ckpt.put(prefix + ".log_std", {log_std_.size()}, log_std_);
  ckpt.set_meta(prefix + ".state_dim", std::to_string(state_dim_));
  ckpt.set_meta(prefix + ".preference_dim", std::to_string(preference_dim_));
}

void GaussianActor::load(const Checkpoint& ckpt, const std::string& prefix) {
  Mlp net = ckpt.get_mlp(prefix + ".net");
  const auto& ls = ckpt.get(prefix + ".log_std").values;
  const std::size_t sd = std::stoul(ckpt.meta(prefix + ".state_dim"));
  const std::size_t pd = std::stoul(ckpt.meta(prefix + ".preference_dim"));
  if (net.input_dim() != sd + pd || net.output_dim() != ls.size() || net.shapes() != net_.shapes()) {
    throw IoError("checkpoint actor does not match the configured architecture");
  }
  net_ = std::move(net);
  state_dim_ = sd;
  preference_dim_ = pd;
  log_std_ = ls;
}

// --- BranchedCritic ---

BranchedCritic::BranchedCritic(std::size_t input_dim, std::size_t objectives, std::size_t hidden, Rng& init_rng)
    : trunk_(tanh_stack(input_dim, hidden, 2)) {
  if (objectives == 0) throw ConfigError("critic needs at least one objective");
  trunk_.init_uniform(init_rng);
  for (std::size_t i = 0; i < objectives; ++i) {
    Mlp head({{hidden, hidden, Activation::kTanh}, {hidden, 1, Activation::kIdentity}});
    head.init_uniform(init_rng);
    heads_.push_back(std::move(head));
  }
}

std::size_t BranchedCritic::parameter_count() const {
  std::size_t n = trunk_.parameter_count();
  for (const auto& h : heads_) n += h.parameter_count();
  return n;
}

std::size_t BranchedCritic::head_offset(std::size_t i) const {
  std::size_t off = trunk_.parameter_count();
  for (std::size_t k = 0; k < i; ++k) off += heads_[k].parameter_count();
  return off;
}

std::vector<double> BranchedCritic::parameters() const {
  std::vector<double> flat(trunk_.parameters().begin(), trunk_.parameters().end());
  for (const auto& h : heads_) flat.insert(flat.end(), h.parameters().begin(), h.parameters().end());
  return flat;
}

void BranchedCritic::assign_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ContractError("critic parameter length mismatch");
  std::size_t off = 0;
  trunk_.assign(flat.subspan(off, trunk_.parameter_count()));
  off += trunk_.parameter_count();
  for (auto& h : heads_) {
    h.assign(flat.subspan(off, h.parameter_count()));
    off += h.parameter_count();
  }
}

std::vector<double> BranchedCritic::value_vector(std::span<const double> state,
                                                 std::span<const double> preference) const {
  const auto features = trunk_.predict(concat_input(state, preference));
  std::vector<double> v(heads_.size());
  for (std::size_t i = 0; i < heads_.size(); ++i) v[i] = heads_[i].predict(features)[0];
  return v;
}

void BranchedCritic::accumulate_gradient(std::span<const double> state, std::span<const double> preference,
                                         std::span<const double> output_grad, std::span<double> grad,
                                         std::span<double> values) const {
  check_span(grad, parameter_count(), "critic");
  if (output_grad.size() != heads_.size() || values.size() != heads_.size()) {
    throw ContractError("critic output gradient length mismatch");
  }
  const Tape trunk_tape = trunk_.forward(concat_input(state, preference));
  const auto features = trunk_tape.output();
  std::vector<double> feature_grad(features.size(), 0.0);
  std::vector<double> head_input_grad(features.size());
  std::size_t off = trunk_.parameter_count();
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    const Tape head_tape = heads_[i].forward(features);
    values[i] = head_tape.output()[0];
    const double g[1] = {output_grad[i]};
    heads_[i].backward(head_tape, g, grad.subspan(off, heads_[i].parameter_count()), head_input_grad);
    for (std::size_t k = 0; k < features.size(); ++k) feature_grad[k] += head_input_grad[k];
    off += heads_[i].parameter_count();
  }
  trunk_.backward(trunk_tape, feature_grad, grad.first(trunk_.parameter_count()));
}

void BranchedCritic::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.set_meta(prefix + ".kind", kind());
  ckpt.set_meta(prefix + ".objectives", std::to_string(heads_.size()));
  ckpt.put_mlp(prefix + ".trunk", trunk_);
  for (std::size_t i = 0; i < heads_.size(); ++i) ckpt.put_mlp(fmt::format("{}.head{}", prefix, i), heads_[i]);
}

void BranchedCritic::load(const Checkpoint& ckpt, const std::string& prefix) {
  if (ckpt.meta(prefix + ".kind") != kind() || std::stoul(ckpt.meta(prefix + ".objectives")) != heads_.size()) {
    throw IoError("checkpoint critic does not match the configured architecture");
  }
  Mlp trunk = ckpt.get_mlp(prefix + ".trunk");
  if (trunk.shapes() != trunk_.shapes()) throw IoError("checkpoint critic trunk shape mismatch");
  std::vector<Mlp> heads;
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    heads.push_back(ckpt.get_mlp(fmt::format("{}.head{}", prefix, i)));
    if (heads.back().shapes() != heads_[i].shapes()) throw IoError("checkpoint critic head shape mismatch");
  }
  trunk_ = std::move(trunk);
  heads_ = std::move(heads);
}

// --- SharedCritic ---

SharedCritic::SharedCritic(std::size_t input_dim, std::size_t objectives, std::size_t hidden, Rng& init_rng)
    : trunk_(tanh_stack(input_dim, hidden, 2)),
      head_({{hidden, hidden, Activation::kTanh}, {hidden, objectives, Activation::kIdentity}}) {
  if (objectives == 0) throw ConfigError("critic needs at least one objective");
  trunk_.init_uniform(init_rng);
  head_.init_uniform(init_rng);
}

std::vector<double> SharedCritic::parameters() const {
  std::vector<double> flat(trunk_.parameters().begin(), trunk_.parameters().end());
  flat.insert(flat.end(), head_.parameters().begin(), head_.parameters().end());
  return flat;
}

void SharedCritic::assign_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ContractError("critic parameter length mismatch");
  trunk_.assign(flat.first(trunk_.parameter_count()));
  head_.assign(flat.subspan(trunk_.parameter_count()));
}

std::vector<double> SharedCritic::value_vector(std::span<const double> state,
                                               std::span<const double> preference) const {
  return head_.predict(trunk_.predict(concat_input(state, preference)));
}

void SharedCritic::accumulate_gradient(std::span<const double> state, std::span<const double> preference,
                                       std::span<const double> output_grad, std::span<double> grad,
                                       std::span<double> values) const {
  check_span(grad, parameter_count(), "critic");
  if (output_grad.size() != objective_count() || values.size() != objective_count()) {
    throw ContractError("critic output gradient length mismatch");
  }
  const Tape trunk_tape = trunk_.forward(concat_input(state, preference));
  const Tape head_tape = head_.forward(trunk_tape.output());
  std::copy(head_tape.output().begin(), head_tape.output().end(), values.begin());
  std::vector<double> feature_grad(trunk_.output_dim());
  head_.backward(head_tape, output_grad, grad.subspan(trunk_.parameter_count()), feature_grad);
  trunk_.backward(trunk_tape, feature_grad, grad.first(trunk_.parameter_count()));
}

void SharedCritic::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.set_meta(prefix + ".kind", kind());
  ckpt.set_meta(prefix + ".objectives", std::to_string(objective_count()));
  ckpt.put_mlp(prefix + ".trunk", trunk_);
  ckpt.put_mlp(prefix + ".head", head_);
}

void SharedCritic::load(const Checkpoint& ckpt, const std::string& prefix) {
  if (ckpt.meta(prefix + ".kind") != kind() || std::stoul(ckpt.meta(prefix + ".objectives")) != objective_count()) {
    throw IoError("checkpoint critic does not match the configured architecture");
  }
  Mlp trunk = ckpt.get_mlp(prefix + ".trunk");
  Mlp head = ckpt.get_mlp(prefix + ".head");
  if (trunk.shapes() != trunk_.shapes() || head.shapes() != head_.shapes()) {
    throw IoError("checkpoint critic shape mismatch");
  }
  trunk_ = std::move(trunk);
  head_ = std::move(head);
}

}  // namespace pasta
