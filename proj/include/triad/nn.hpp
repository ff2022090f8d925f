#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "triad/weights.hpp"

namespace triad::nn {

enum class Activation : std::uint32_t { Relu = 0, Tanh = 1, Linear = 2, Softmax = 3 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Linear;
  std::size_t weight_offset = 0;  // row-major out x in block
  std::size_t bias_offset = 0;
};

/// Fully connected network with all parameters in one contiguous buffer.
/// Each instance carries an identity and a generation counter so tapes
/// recorded against older parameters are rejected by backward().
class DenseNet {
 public:
  DenseNet() = default;
  /// `sizes` has one more entry than `activations`. Parameters start at zero.
  DenseNet(std::vector<std::size_t> sizes, std::vector<Activation> activations);

  DenseNet(const DenseNet& other);
  DenseNet& operator=(const DenseNet& other);
  DenseNet(DenseNet&&) noexcept = default;
  DenseNet& operator=(DenseNet&&) noexcept = default;

  /// Kaiming-uniform for relu layers, Xavier-uniform for tanh, +-1/sqrt(fan_in)
  /// otherwise; biases zero.
  void initialize(std::mt19937_64& rng);

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const noexcept { return params_.size(); }
  const std::vector<LayerShape>& layers() const noexcept { return layers_; }

  std::span<const double> parameters() const noexcept { return params_; }
  /// Mutable access invalidates outstanding tapes.
  std::span<double> mutable_parameters();

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t generation() const noexcept { return generation_; }

  bool same_shape(const DenseNet& other) const;

 private:
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
  std::uint64_t id_ = next_id();
  std::uint64_t generation_ = 0;

  static std::uint64_t next_id();
};

/// Cached activations of one forward pass.
struct Tape {
  std::uint64_t net_id = 0;
  std::uint64_t generation = 0;
  std::vector<std::vector<double>> values;  // values[0] = input, values[l+1] = layer l output
};

struct ForwardResult {
  std::vector<double> output;
  Tape tape;
};

ForwardResult forward(const DenseNet& net, std::span<const double> input);

/// Forward pass without recording a tape.
std::vector<double> predict(const DenseNet& net, std::span<const double> input);

struct Gradients {
  std::vector<double> params;  // same layout as DenseNet::parameters()
  std::vector<double> input;
};

Gradients backward(const DenseNet& net, const Tape& tape, std::span<const double> output_grad);

/// Accumulating variant: param_grad += dL/dtheta; input_grad (optional) = dL/dx.
void backward_accumulate(const DenseNet& net, const Tape& tape, std::span<const double> output_grad,
                         std::span<double> param_grad, std::vector<double>* input_grad);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Max-subtracted softmax onto the simplex.
WeightVector softmax(std::span<const double> logits);

/// dL/dlogits given dL/dp for p = softmax(logits).
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> grad_probs);

/// out = tau * live + (1 - tau) * out.
void polyak_update(DenseNet& target, const DenseNet& live, double tau);

// Checkpoints: "TNN1" magic, u32 version, u32 layer count, per layer
// (u32 in, u32 out, u32 activation), u64 parameter count, raw little-endian doubles.
void write_binary(std::ostream& out, const DenseNet& net);
DenseNet read_binary(std::istream& in);
std::string to_json(const DenseNet& net);
DenseNet from_json(const std::string& text);

}  // namespace triad::nn
