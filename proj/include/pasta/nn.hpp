#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pasta/rng.hpp"

namespace pasta {

enum class Activation { kTanh, kSigmoid, kIdentity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kTanh;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Value copy of one affine+activation layer. Weights are out x in, row-major.
struct DenseLayer {
  LayerShape shape;
  std::vector<double> weights;
  std::vector<double> biases;
};

// Activation record of one forward pass. activations[0] is the input,
// activations[l + 1] is the post-activation output of layer l.
struct Tape {
  std::vector<std::vector<double>> activations;
  std::uint64_t signature = 0;

  std::span<const double> output() const { return activations.back(); }
};

// Feed-forward stack of dense layers with all parameters in one flat vector.
//
// Flat layout is layer-major; within a layer the weights come first in
// row-major order, followed by the biases. Gradients use the same layout.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<LayerShape> shapes);

  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  void init_uniform(Rng& rng);

  std::size_t input_dim() const { return shapes_.empty() ? 0 : shapes_.front().in; }
  std::size_t output_dim() const { return shapes_.empty() ? 0 : shapes_.back().out; }
  std::size_t layer_count() const { return shapes_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<LayerShape>& shapes() const { return shapes_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  void assign(std::span<const double> flat);

  DenseLayer layer(std::size_t l) const;
  void set_layer(std::size_t l, const DenseLayer& layer);
  double& weight(std::size_t l, std::size_t row, std::size_t col);
  double& bias(std::size_t l, std::size_t row);

  // Identifies the parameter shape; a tape from a differently shaped
  // network is rejected by backward.
  std::uint64_t signature() const { return signature_; }

  Tape forward(std::span<const double> input) const;
  std::vector<double> predict(std::span<const double> input) const;

  // Adds d(output_grad . output)/d(theta) into param_grad. When input_grad is
  // non-empty it receives (overwrites) the gradient w.r.t. the input.
  void backward(const Tape& tape, std::span<const double> output_grad, std::span<double> param_grad,
                std::span<double> input_grad = {}) const;

  // Convenience wrapper returning a fresh flat gradient.
  std::vector<double> backward(const Tape& tape, std::span<const double> output_grad) const;

 private:
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const { return offsets_[l] + shapes_[l].in * shapes_[l].out; }

  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t signature_ = 0;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg) : config(cfg), first_moment(n, 0.0), second_moment(n, 0.0) {}

  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
};

// Bias-corrected Adam. With ascent set the step follows +grad. Throws
// DivergenceError naming `component` if grad has a non-finite entry.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, bool ascent,
               std::string_view component);

// Versioned text container of named tensors plus string metadata. Values
// are stored as hexadecimal floating point, so a save/load round trip is
// exact.
//
//   pasta-checkpoint 1
//   meta <key> <value>
//   tensor <name> <rank> <dim>...
//   <one value per line>
//   end
class Checkpoint {
 public:
  struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
  };

  void set_meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  const std::string& meta(const std::string& key) const;
  bool has_meta(const std::string& key) const { return meta_.count(key) != 0; }

  void put(const std::string& name, std::vector<std::size_t> shape, std::span<const double> values);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return tensors_.count(name) != 0; }

  void put_mlp(const std::string& prefix, const Mlp& net);
  Mlp get_mlp(const std::string& prefix) const;

  void put_adam(const std::string& prefix, const AdamState& state);
  AdamState get_adam(const std::string& prefix) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  std::string serialize() const;
  static Checkpoint parse(std::string_view text);

 private:
  std::map<std::string, std::string> meta_;
  std::map<std::string, Tensor> tensors_;
};

}  // namespace pasta
