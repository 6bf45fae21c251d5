#include "pasta/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pasta/error.hpp"
#include "pasta/hexfloat.hpp"

namespace pasta {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::kIdentity:
      return z;
  }
  return z;
}

// Derivative expressed through the activation output y.
double activate_derivative(Activation a, double y) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

std::uint64_t shape_signature(const std::vector<LayerShape>& shapes) {
  // FNV-1a over the layer dimensions and activations.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const auto& s : shapes) {
    mix(s.in);
    mix(s.out);
    mix(static_cast<std::uint64_t>(s.activation));
  }
  return h;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "identity") return Activation::kIdentity;
  throw IoError(fmt::format("unknown activation '{}'", name));
}

Mlp::Mlp(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    if (shapes_[l].in == 0 || shapes_[l].out == 0) {
      throw ConfigError("dense layer dimensions must be positive");
    }
    if (l > 0 && shapes_[l].in != shapes_[l - 1].out) {
      throw ConfigError(fmt::format("layer {} expects {} inputs but layer {} emits {}", l, shapes_[l].in, l - 1,
                                    shapes_[l - 1].out));
    }
    offsets_.push_back(total);
    total += shapes_[l].in * shapes_[l].out + shapes_[l].out;
  }
  params_.assign(total, 0.0);
  signature_ = shape_signature(shapes_);
}

void Mlp::init_uniform(Rng& rng) {
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shapes_[l].in));
    const std::size_t w0 = weight_offset(l);
    for (std::size_t k = 0; k < shapes_[l].in * shapes_[l].out; ++k) {
      params_[w0 + k] = rng.uniform(-bound, bound);
    }
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l)), shapes_[l].out, 0.0);
  }
}

void Mlp::assign(std::span<const double> flat) {
  if (flat.size() != params_.size()) {
    throw ContractError(fmt::format("parameter vector has {} entries, network expects {}", flat.size(),
                                    params_.size()));
  }
  std::copy(flat.begin(), flat.end(), params_.begin());
}

DenseLayer Mlp::layer(std::size_t l) const {
  DenseLayer out;
  out.shape = shapes_.at(l);
  const auto w0 = params_.begin() + static_cast<std::ptrdiff_t>(weight_offset(l));
  const auto b0 = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l));
  out.weights.assign(w0, w0 + static_cast<std::ptrdiff_t>(out.shape.in * out.shape.out));
  out.biases.assign(b0, b0 + static_cast<std::ptrdiff_t>(out.shape.out));
  return out;
}

void Mlp::set_layer(std::size_t l, const DenseLayer& layer) {
  const auto& s = shapes_.at(l);
  if (layer.shape.in != s.in || layer.shape.out != s.out || layer.shape.activation != s.activation ||
      layer.weights.size() != s.in * s.out || layer.biases.size() != s.out) {
    throw ContractError(fmt::format("layer {} shape mismatch", l));
  }
  std::copy(layer.weights.begin(), layer.weights.end(),
            params_.begin() + static_cast<std::ptrdiff_t>(weight_offset(l)));
  std::copy(layer.biases.begin(), layer.biases.end(), params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l)));
}

double& Mlp::weight(std::size_t l, std::size_t row, std::size_t col) {
  return params_[weight_offset(l) + row * shapes_[l].in + col];
}

double& Mlp::bias(std::size_t l, std::size_t row) { return params_[bias_offset(l) + row]; }

Tape Mlp::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw ConfigError(fmt::format("network input has {} entries, expected {}", input.size(), input_dim()));
  }
  Tape tape;
  tape.signature = signature_;
  tape.activations.reserve(shapes_.size() + 1);
  tape.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const auto& s = shapes_[l];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const std::vector<double>& x = tape.activations.back();
    std::vector<double> y(s.out);
    for (std::size_t r = 0; r < s.out; ++r) {
      const double* row = w + r * s.in;
      double z = b[r];
      for (std::size_t c = 0; c < s.in; ++c) z += row[c] * x[c];
      y[r] = activate(s.activation, z);
    }
    tape.activations.push_back(std::move(y));
  }
  return tape;
}

std::vector<double> Mlp::predict(std::span<const double> input) const {
  Tape tape = forward(input);
  return std::move(tape.activations.back());
}

void Mlp::backward(const Tape& tape, std::span<const double> output_grad, std::span<double> param_grad,
                   std::span<double> input_grad) const {
  if (tape.signature != signature_ || tape.activations.size() != shapes_.size() + 1) {
    throw ContractError("stale tape: recorded on a network with a different shape");
  }
  if (output_grad.size() != output_dim()) {
    throw ContractError(fmt::format("output gradient has {} entries, expected {}", output_grad.size(), output_dim()));
  }
  if (param_grad.size() != params_.size()) {
    throw ContractError(fmt::format("gradient buffer has {} entries, expected {}", param_grad.size(), params_.size()));
  }
  if (!input_grad.empty() && input_grad.size() != input_dim()) {
    throw ContractError("input gradient buffer has the wrong length");
  }

  std::vector<double> upstream(output_grad.begin(), output_grad.end());
  std::vector<double> below;
  for (std::size_t l = shapes_.size(); l-- > 0;) {
    const auto& s = shapes_[l];
    const std::vector<double>& x = tape.activations[l];
    const std::vector<double>& y = tape.activations[l + 1];
    const double* w = params_.data() + weight_offset(l);
    double* gw = param_grad.data() + weight_offset(l);
    double* gb = param_grad.data() + bias_offset(l);

    const bool need_below = l > 0 || !input_grad.empty();
    if (need_below) below.assign(s.in, 0.0);
    for (std::size_t r = 0; r < s.out; ++r) {
      const double dz = upstream[r] * activate_derivative(s.activation, y[r]);
      if (dz == 0.0) continue;
      gb[r] += dz;
      double* grow = gw + r * s.in;
      for (std::size_t c = 0; c < s.in; ++c) grow[c] += dz * x[c];
      if (need_below) {
        const double* wrow = w + r * s.in;
        for (std::size_t c = 0; c < s.in; ++c) below[c] += dz * wrow[c];
      }
    }
    if (need_below) upstream.swap(below);
  }
  if (!input_grad.empty()) std::copy(upstream.begin(), upstream.end(), input_grad.begin());
}

std::vector<double> Mlp::backward(const Tape& tape, std::span<const double> output_grad) const {
  std::vector<double> grad(params_.size(), 0.0);
  backward(tape, output_grad, grad);
  return grad;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, bool ascent,
               std::string_view component) {
  if (grad.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ContractError(fmt::format("adam step on {}: gradient/moment length mismatch", component));
  }
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!std::isfinite(grad[k])) {
      throw DivergenceError(std::string(component), fmt::format("non-finite gradient entry at index {}", k));
    }
  }
  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const double sign = ascent ? 1.0 : -1.0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[k];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[k] * grad[k];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] += sign * c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw IoError(fmt::format("checkpoint has no metadata '{}'", key));
  return it->second;
}

void Checkpoint::put(const std::string& name, std::vector<std::size_t> shape, std::span<const double> values) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  if (count != values.size()) {
    throw ContractError(fmt::format("tensor '{}' shape does not match {} values", name, values.size()));
  }
  tensors_[name] = Tensor{std::move(shape), std::vector<double>(values.begin(), values.end())};
}

const Checkpoint::Tensor& Checkpoint::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw IoError(fmt::format("checkpoint has no tensor '{}'", name));
  return it->second;
}

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
  set_meta(prefix + ".layers", std::to_string(net.layer_count()));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const DenseLayer layer = net.layer(l);
    const std::string base = fmt::format("{}.{}", prefix, l);
    set_meta(base + ".activation", std::string(to_string(layer.shape.activation)));
    put(base + ".weight", {layer.shape.out, layer.shape.in}, layer.weights);
    put(base + ".bias", {layer.shape.out}, layer.biases);
  }
}

Mlp Checkpoint::get_mlp(const std::string& prefix) const {
  const std::size_t layers = std::stoul(meta(prefix + ".layers"));
  std::vector<LayerShape> shapes;
  std::vector<DenseLayer> values;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = fmt::format("{}.{}", prefix, l);
    const Tensor& w = get(base + ".weight");
    const Tensor& b = get(base + ".bias");
    if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[0]) {
      throw IoError(fmt::format("checkpoint layer '{}' has inconsistent shapes", base));
    }
    LayerShape s{w.shape[1], w.shape[0], activation_from_string(meta(base + ".activation"))};
    shapes.push_back(s);
    values.push_back(DenseLayer{s, w.values, b.values});
  }
  Mlp net(shapes);
  for (std::size_t l = 0; l < layers; ++l) net.set_layer(l, values[l]);
  return net;
}

void Checkpoint::put_adam(const std::string& prefix, const AdamState& state) {
  set_meta(prefix + ".step_count", std::to_string(state.step_count));
  set_meta(prefix + ".learning_rate", format_hex(state.config.learning_rate));
  set_meta(prefix + ".beta1", format_hex(state.config.beta1));
  set_meta(prefix + ".beta2", format_hex(state.config.beta2));
  set_meta(prefix + ".epsilon", format_hex(state.config.epsilon));
  put(prefix + ".m", {state.first_moment.size()}, state.first_moment);
  put(prefix + ".v", {state.second_moment.size()}, state.second_moment);
}

AdamState Checkpoint::get_adam(const std::string& prefix) const {
  AdamConfig cfg;
  cfg.learning_rate = parse_hex(meta(prefix + ".learning_rate"), "checkpoint");
  cfg.beta1 = parse_hex(meta(prefix + ".beta1"), "checkpoint");
  cfg.beta2 = parse_hex(meta(prefix + ".beta2"), "checkpoint");
  cfg.epsilon = parse_hex(meta(prefix + ".epsilon"), "checkpoint");
  AdamState state(get(prefix + ".m").values.size(), cfg);
  state.first_moment = get(prefix + ".m").values;
  state.second_moment = get(prefix + ".v").values;
  if (state.second_moment.size() != state.first_moment.size()) {
    throw IoError(fmt::format("checkpoint optimizer '{}' moments differ in length", prefix));
  }
  state.step_count = std::stoll(meta(prefix + ".step_count"));
  return state;
}

std::string Checkpoint::serialize() const {
  std::string out = "pasta-checkpoint 1\n";
  for (const auto& [k, v] : meta_) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractError(fmt::format("checkpoint metadata '{}' contains whitespace", k));
    }
    out += fmt::format("meta {} {}\n", k, v);
  }
  for (const auto& [name, t] : tensors_) {
    out += fmt::format("tensor {} {}", name, t.shape.size());
    for (auto d : t.shape) out += fmt::format(" {}", d);
    out += '\n';
    for (double v : t.values) {
      out += format_hex(v);
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

Checkpoint Checkpoint::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "pasta-checkpoint 1") {
    throw IoError("not a pasta checkpoint (bad header or unsupported version)");
  }
  Checkpoint ckpt;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta_[key] = value;
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rank = 0;
      fields >> name >> rank;
      Tensor t;
      std::size_t count = 1;
      for (std::size_t r = 0; r < rank; ++r) {
        std::size_t d = 0;
        if (!(fields >> d)) throw IoError(fmt::format("truncated shape for tensor '{}'", name));
        t.shape.push_back(d);
        count *= d;
      }
      t.values.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        if (!std::getline(in, line)) throw IoError(fmt::format("truncated values for tensor '{}'", name));
        t.values.push_back(parse_hex(line, "checkpoint"));
      }
      ckpt.tensors_[name] = std::move(t);
    } else {
      throw IoError(fmt::format("unexpected checkpoint record '{}'", kind));
    }
  }
  if (!ended) throw IoError("checkpoint is truncated (missing end marker)");
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", path));
  out << serialize();
  if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", path));
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

}  // namespace pasta
