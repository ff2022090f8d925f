#include "triad/nn.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "triad/error.hpp"
#include "triad/linalg.hpp"
#include "triad/simd.hpp"

namespace triad::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian hosts");

constexpr char kMagic[4] = {'T', 'N', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

void apply_activation(Activation a, std::span<double> v) {
  switch (a) {
    case Activation::Relu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::Tanh:
      for (double& x : v) x = std::tanh(x);
      break;
    case Activation::Linear:
      break;
    case Activation::Softmax: {
      const WeightVector p = softmax(v);
      std::copy(p.begin(), p.end(), v.begin());
      break;
    }
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(Errc::BadCheckpoint, "truncated network checkpoint");
  }
  return v;
}

void check_input(const DenseNet& net, std::span<const double> input) {
  if (net.layers().empty()) throw Error(Errc::DimensionMismatch, "network has no layers");
  if (input.size() != net.input_size()) {
    throw Error(Errc::DimensionMismatch, "input has " + std::to_string(input.size()) +
                                             " features, network expects " +
                                             std::to_string(net.input_size()));
  }
  if (!all_finite(input)) throw Error(Errc::NonFiniteInput, "network input contains NaN/Inf");
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  if (s == "softmax") return Activation::Softmax;
  throw Error(Errc::BadCheckpoint, "unknown activation '" + s + "'");
}

std::uint64_t DenseNet::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

DenseNet::DenseNet(std::vector<std::size_t> sizes, std::vector<Activation> activations) {
  if (sizes.size() != activations.size() + 1 || activations.empty()) {
    throw Error(Errc::ShapeMismatch, "need one activation per layer");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < activations.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) throw Error(Errc::ShapeMismatch, "zero-width layer");
    if (activations[l] == Activation::Softmax && l + 1 != activations.size()) {
      throw Error(Errc::ShapeMismatch, "softmax is only allowed on the output layer");
    }
    LayerShape s;
    s.in = sizes[l];
    s.out = sizes[l + 1];
    s.activation = activations[l];
    s.weight_offset = offset;
    offset += s.in * s.out;
    s.bias_offset = offset;
    offset += s.out;
    layers_.push_back(s);
  }
  params_.assign(offset, 0.0);
}

DenseNet::DenseNet(const DenseNet& other)
    : layers_(other.layers_), params_(other.params_), generation_(other.generation_) {}

DenseNet& DenseNet::operator=(const DenseNet& other) {
  if (this != &other) {
    layers_ = other.layers_;
    params_ = other.params_;
    ++generation_;
  }
  return *this;
}

void DenseNet::initialize(std::mt19937_64& rng) {
  for (const LayerShape& s : layers_) {
    const double fan_in = static_cast<double>(s.in);
    const double fan_out = static_cast<double>(s.out);
    double bound = 1.0 / std::sqrt(fan_in);
    if (s.activation == Activation::Relu) bound = std::sqrt(6.0 / fan_in);
    if (s.activation == Activation::Tanh) bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < s.in * s.out; ++k) params_[s.weight_offset + k] = dist(rng);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(s.bias_offset), s.out, 0.0);
  }
  ++generation_;
}

std::size_t DenseNet::input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
std::size_t DenseNet::output_size() const { return layers_.empty() ? 0 : layers_.back().out; }

std::span<double> DenseNet::mutable_parameters() {
  ++generation_;
  return params_;
}

bool DenseNet::same_shape(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].in != other.layers_[l].in || layers_[l].out != other.layers_[l].out ||
        layers_[l].activation != other.layers_[l].activation) {
      return false;
    }
  }
  return true;
}

ForwardResult forward(const DenseNet& net, std::span<const double> input) {
  check_input(net, input);
  const auto& k = simd::active();
  const double* p = net.parameters().data();
  ForwardResult r;
  r.tape.net_id = net.id();
  r.tape.generation = net.generation();
  r.tape.values.reserve(net.layers().size() + 1);
  r.tape.values.emplace_back(input.begin(), input.end());
  for (const LayerShape& s : net.layers()) {
    std::vector<double> y(s.out);
    k.gemv(p + s.weight_offset, s.out, s.in, r.tape.values.back().data(), p + s.bias_offset, y.data());
    apply_activation(s.activation, y);
    r.tape.values.push_back(std::move(y));
  }
  r.output = r.tape.values.back();
  return r;
}

std::vector<double> predict(const DenseNet& net, std::span<const double> input) {
  check_input(net, input);
  const auto& k = simd::active();
  const double* p = net.parameters().data();
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (const LayerShape& s : net.layers()) {
    y.assign(s.out, 0.0);
    k.gemv(p + s.weight_offset, s.out, s.in, x.data(), p + s.bias_offset, y.data());
    apply_activation(s.activation, y);
    x.swap(y);
  }
  return x;
}

void backward_accumulate(const DenseNet& net, const Tape& tape, std::span<const double> output_grad,
                         std::span<double> param_grad, std::vector<double>* input_grad) {
  const auto& layers = net.layers();
  if (tape.net_id != net.id() || tape.generation != net.generation() ||
      tape.values.size() != layers.size() + 1) {
    throw Error(Errc::StaleTape, "tape was not recorded against the current parameters");
  }
  if (output_grad.size() != net.output_size()) {
    throw Error(Errc::DimensionMismatch, "output gradient size differs from network output");
  }
  if (param_grad.size() != net.parameter_count()) {
    throw Error(Errc::ShapeMismatch, "parameter gradient buffer has wrong size");
  }
  const auto& k = simd::active();
  const double* p = net.parameters().data();
  std::vector<double> g(output_grad.begin(), output_grad.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerShape& s = layers[li];
    const std::vector<double>& out = tape.values[li + 1];
    const std::vector<double>& in = tape.values[li];
    std::vector<double> delta(s.out);
    switch (s.activation) {
      case Activation::Relu:
        for (std::size_t o = 0; o < s.out; ++o) delta[o] = out[o] > 0.0 ? g[o] : 0.0;
        break;
      case Activation::Tanh:
        for (std::size_t o = 0; o < s.out; ++o) delta[o] = g[o] * (1.0 - out[o] * out[o]);
        break;
      case Activation::Linear:
        delta = g;
        break;
      case Activation::Softmax:
        delta = softmax_backward(out, g);
        break;
    }
    k.ger_acc(param_grad.data() + s.weight_offset, s.out, s.in, delta.data(), in.data());
    k.axpy(1.0, delta.data(), param_grad.data() + s.bias_offset, s.out);
    if (li > 0 || input_grad != nullptr) {
      std::vector<double> gin(s.in, 0.0);
      k.gemv_t_acc(p + s.weight_offset, s.out, s.in, delta.data(), gin.data());
      g.swap(gin);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(g);
}

Gradients backward(const DenseNet& net, const Tape& tape, std::span<const double> output_grad) {
  Gradients grads;
  grads.params.assign(net.parameter_count(), 0.0);
  backward_accumulate(net, tape, output_grad, grads.params, &grads.input);
  return grads;
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig cfg)
    : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw Error(Errc::ShapeMismatch, "Adam state, parameters and gradients differ in size");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bias1;
    const double v_hat = state.second_moment[i] / bias2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

WeightVector softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(Errc::DimensionMismatch, "softmax of empty vector");
  if (!all_finite(logits)) throw Error(Errc::NonFiniteInput, "softmax logits contain NaN/Inf");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::exp(logits[i] - mx);
    sum += e[i];
  }
  for (double& v : e) v /= sum;
  return WeightVector(std::move(e));
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> grad_probs) {
  const double inner = simd::dot(probs, grad_probs);
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probs[i] * (grad_probs[i] - inner);
  return out;
}

void polyak_update(DenseNet& target, const DenseNet& live, double tau) {
  if (!target.same_shape(live)) throw Error(Errc::ShapeMismatch, "target and live nets differ in shape");
  std::span<double> t = target.mutable_parameters();
  std::span<const double> l = live.parameters();
  if (tau == 1.0) {
    std::copy(l.begin(), l.end(), t.begin());
    return;
  }
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau * l[i] + (1.0 - tau) * t[i];
}

void write_binary(std::ostream& out, const DenseNet& net) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const LayerShape& s : net.layers()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.in));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.out));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.activation));
  }
  put<std::uint64_t>(out, net.parameter_count());
  out.write(reinterpret_cast<const char*>(net.parameters().data()),
            static_cast<std::streamsize>(net.parameter_count() * sizeof(double)));
  if (!out) throw Error(Errc::IoFailure, "failed writing network checkpoint");
}

DenseNet read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(Errc::BadCheckpoint, "not a network checkpoint");
  }
  if (get<std::uint32_t>(in) != kVersion) throw Error(Errc::BadCheckpoint, "unsupported checkpoint version");
  const auto count = get<std::uint32_t>(in);
  std::vector<std::size_t> sizes;
  std::vector<Activation> acts;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto lin = get<std::uint32_t>(in);
    const auto lout = get<std::uint32_t>(in);
    const auto act = get<std::uint32_t>(in);
    if (act > static_cast<std::uint32_t>(Activation::Softmax)) {
      throw Error(Errc::BadCheckpoint, "unknown activation tag");
    }
    if (l == 0) sizes.push_back(lin);
    else if (sizes.back() != lin) throw Error(Errc::BadCheckpoint, "layer sizes do not chain");
    sizes.push_back(lout);
    acts.push_back(static_cast<Activation>(act));
  }
  DenseNet net(sizes, acts);
  if (get<std::uint64_t>(in) != net.parameter_count()) {
    throw Error(Errc::BadCheckpoint, "parameter count does not match layer shapes");
  }
  std::span<double> p = net.mutable_parameters();
  if (!in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)))) {
    throw Error(Errc::BadCheckpoint, "truncated parameter block");
  }
  return net;
}

std::string to_json(const DenseNet& net) {
  nlohmann::json j;
  j["version"] = kVersion;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerShape& s : net.layers()) {
    layers.push_back({{"in", s.in}, {"out", s.out}, {"activation", to_string(s.activation)}});
  }
  j["layers"] = layers;
  j["parameters"] = std::vector<double>(net.parameters().begin(), net.parameters().end());
  return j.dump();
}

DenseNet from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("version").get<std::uint32_t>() != kVersion) {
      throw Error(Errc::BadCheckpoint, "unsupported checkpoint version");
    }
    std::vector<std::size_t> sizes;
    std::vector<Activation> acts;
    for (const auto& l : j.at("layers")) {
      if (sizes.empty()) sizes.push_back(l.at("in").get<std::size_t>());
      sizes.push_back(l.at("out").get<std::size_t>());
      acts.push_back(activation_from_string(l.at("activation").get<std::string>()));
    }
    DenseNet net(sizes, acts);
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != net.parameter_count()) {
      throw Error(Errc::BadCheckpoint, "parameter count does not match layer shapes");
    }
    std::span<double> p = net.mutable_parameters();
    std::copy(params.begin(), params.end(), p.begin());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCheckpoint, e.what());
  }
}

}  // namespace triad::nn
