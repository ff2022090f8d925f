#include "triad/rl_agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "triad/error.hpp"

namespace triad {
namespace {

constexpr char kAgentMagic[4] = {'T', 'R', 'L', '1'};
constexpr std::uint32_t kAgentVersion = 1;

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

nn::DenseNet make_net(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  std::vector<nn::Activation> acts;
  for (std::size_t h : hidden) {
    sizes.push_back(h);
    acts.push_back(nn::Activation::Relu);
  }
  sizes.push_back(out);
  acts.push_back(nn::Activation::Linear);
  return nn::DenseNet(sizes, acts);
}

nlohmann::json config_json(const Td3Config& c) {
  return {{"hidden", c.hidden},         {"gamma", c.gamma},
          {"tau", c.tau},               {"policy_delay", c.policy_delay},
          {"explore_sigma", c.explore_sigma}, {"smooth_sigma", c.smooth_sigma},
          {"smooth_clip", c.smooth_clip},     {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity}, {"warmup", c.warmup},
          {"updates_per_step", c.updates_per_step}, {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},   {"reward_scale", c.reward_scale}};
}

Td3Config config_from_json(const nlohmann::json& j) {
  Td3Config c;
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.gamma = j.at("gamma");
  c.tau = j.at("tau");
  c.policy_delay = j.at("policy_delay");
  c.explore_sigma = j.at("explore_sigma");
  c.smooth_sigma = j.at("smooth_sigma");
  c.smooth_clip = j.at("smooth_clip");
  c.batch_size = j.at("batch_size");
  c.buffer_capacity = j.at("buffer_capacity");
  c.warmup = j.at("warmup");
  c.updates_per_step = j.at("updates_per_step");
  c.actor_lr = j.at("actor_lr");
  c.critic_lr = j.at("critic_lr");
  c.reward_scale = j.at("reward_scale");
  return c;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(Errc::InvalidConfig, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw Error(Errc::IndexOutOfRange, "replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

void ReplayBuffer::clear() {
  items_.clear();
  head_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
  if (batch > items_.size()) throw Error(Errc::InsufficientBuffer, "batch larger than buffer");
  // Partial Fisher-Yates over the index range.
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  return idx;
}

void RewardConfig::validate() const {
  if (!(lambda1 > 0.0)) throw Error(Errc::InvalidConfig, "lambda1 must be positive");
  if (!(lambda2 >= 0.0)) throw Error(Errc::InvalidConfig, "lambda2 must be non-negative");
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(Errc::DimensionMismatch, "JSD operands differ in length");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log(q[i] / m);
  }
  return std::clamp(0.5 * (kl_p + kl_q), 0.0, std::numbers::ln2);
}

EpisodeReward episode_reward(std::span<const double> growth, std::span<const double> jsd_terms, double c0,
                             const RewardConfig& cfg) {
  if (growth.size() != jsd_terms.size() || growth.empty()) {
    throw Error(Errc::DimensionMismatch, "growth and JSD sequences must share a non-zero length");
  }
  if (!(c0 > 0.0)) throw Error(Errc::NonPositiveGrowth, "initial capital must be positive");
  double log_sum = std::log(c0);
  for (double r : growth) {
    if (!(r > 0.0)) throw Error(Errc::NonPositiveGrowth, "growth rate must be positive");
    log_sum += std::log(r);
  }
  const double t = static_cast<double>(growth.size());
  EpisodeReward e;
  e.j_r = log_sum / t;
  e.j_js = -std::accumulate(jsd_terms.begin(), jsd_terms.end(), 0.0) / t;
  e.j = cfg.lambda1 * e.j_r + cfg.lambda2 * e.j_js;
  return e;
}

double per_step_reward(double growth, const WeightVector& a_rl, const WeightVector& a_final,
                       const RewardConfig& cfg) {
  if (!(growth > 0.0)) throw Error(Errc::NonPositiveGrowth, "growth rate must be positive");
  return cfg.lambda1 * std::log(growth) - cfg.lambda2 * jensen_shannon(a_rl, a_final);
}

void Td3Config::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(Errc::InvalidConfig, "tau must lie in (0, 1]");
  if (policy_delay < 1) throw Error(Errc::InvalidConfig, "policy_delay must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::InvalidConfig, "gamma must lie in [0, 1]");
  if (batch_size == 0 || buffer_capacity == 0) throw Error(Errc::InvalidConfig, "batch/buffer must be positive");
  if (explore_sigma < 0.0 || smooth_sigma < 0.0 || smooth_clip < 0.0) {
    throw Error(Errc::InvalidConfig, "noise scales must be non-negative");
  }
}

Td3Agent::Td3Agent(std::size_t observation_size, std::size_t assets, Td3Config config, std::uint64_t seed)
    : rng(seed), observation_size_(observation_size), assets_(assets), config_(std::move(config)) {
  config_.validate();
  actor = make_net(observation_size, config_.hidden, assets);
  critic1 = make_net(observation_size + assets, config_.hidden, 1);
  critic2 = make_net(observation_size + assets, config_.hidden, 1);
  actor.initialize(rng);
  critic1.initialize(rng);
  critic2.initialize(rng);
  actor_target = actor;
  critic1_target = critic1;
  critic2_target = critic2;
  actor_opt = nn::AdamState(actor.parameter_count(), {config_.actor_lr});
  critic1_opt = nn::AdamState(critic1.parameter_count(), {config_.critic_lr});
  critic2_opt = nn::AdamState(critic2.parameter_count(), {config_.critic_lr});
}

WeightVector Td3Agent::select_action(const Observation& obs) const {
  if (obs.features.size() != observation_size_) {
    throw Error(Errc::DimensionMismatch, "observation size differs from actor input");
  }
  return nn::softmax(nn::predict(actor, obs.features));
}

WeightVector Td3Agent::select_action(const Observation& obs, bool explore, std::mt19937_64& gen) const {
  if (!explore) return select_action(obs);
  if (obs.features.size() != observation_size_) {
    throw Error(Errc::DimensionMismatch, "observation size differs from actor input");
  }
  std::vector<double> logits = nn::predict(actor, obs.features);
  std::normal_distribution<double> noise(0.0, config_.explore_sigma);
  for (double& l : logits) l += noise(gen);
  return nn::softmax(logits);
}

Td3Diagnostics td3_update(Td3Agent& agent, const ReplayBuffer& buffer, std::size_t batch_size) {
  if (batch_size == 0 || buffer.size() < batch_size) {
    throw Error(Errc::InsufficientBuffer, "replay buffer holds fewer transitions than the batch size");
  }
  const Td3Config& cfg = agent.config();
  const std::vector<std::size_t> batch = buffer.sample(batch_size, agent.rng);
  const double inv_b = 1.0 / static_cast<double>(batch_size);

  Td3Diagnostics diag;
  diag.target_q1.resize(batch_size);
  diag.target_q2.resize(batch_size);
  diag.target_y.resize(batch_size);

  std::normal_distribution<double> smooth(0.0, cfg.smooth_sigma);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const Transition& tr = buffer.at(batch[b]);
    std::vector<double> logits = nn::predict(agent.actor_target, tr.o_next.features);
    for (double& l : logits) l += std::clamp(smooth(agent.rng), -cfg.smooth_clip, cfg.smooth_clip);
    const WeightVector next_action = nn::softmax(logits);
    const std::vector<double> x = concat(tr.o_next.features, next_action.values());
    diag.target_q1[b] = nn::predict(agent.critic1_target, x)[0];
    diag.target_q2[b] = nn::predict(agent.critic2_target, x)[0];
    diag.target_y[b] = cfg.reward_scale * tr.reward + cfg.gamma * std::min(diag.target_q1[b], diag.target_q2[b]);
  }

  double loss1 = 0.0;
  double loss2 = 0.0;
  std::vector<double> grad1(agent.critic1.parameter_count(), 0.0);
  std::vector<double> grad2(agent.critic2.parameter_count(), 0.0);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const Transition& tr = buffer.at(batch[b]);
    const std::vector<double> x = concat(tr.o_prev.features, tr.a_final.values());
    const nn::ForwardResult f1 = nn::forward(agent.critic1, x);
    const nn::ForwardResult f2 = nn::forward(agent.critic2, x);
    const double e1 = f1.output[0] - diag.target_y[b];
    const double e2 = f2.output[0] - diag.target_y[b];
    loss1 += e1 * e1 * inv_b;
    loss2 += e2 * e2 * inv_b;
    const double g1[1] = {2.0 * e1 * inv_b};
    const double g2[1] = {2.0 * e2 * inv_b};
    nn::backward_accumulate(agent.critic1, f1.tape, g1, grad1, nullptr);
    nn::backward_accumulate(agent.critic2, f2.tape, g2, grad2, nullptr);
  }
  nn::adam_step(agent.critic1_opt, agent.critic1.mutable_parameters(), grad1);
  nn::adam_step(agent.critic2_opt, agent.critic2.mutable_parameters(), grad2);
  diag.critic_loss = 0.5 * (loss1 + loss2);

  ++agent.update_count;
  if (agent.update_count % cfg.policy_delay != 0) return diag;

  // Delayed policy step: ascend Q1(o, softmax(actor(o))).
  const std::size_t n_obs = agent.observation_size();
  std::vector<double> actor_grad(agent.actor.parameter_count(), 0.0);
  std::vector<double> critic_scratch(agent.critic1.parameter_count(), 0.0);
  double actor_loss = 0.0;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const Transition& tr = buffer.at(batch[b]);
    const nn::ForwardResult fa = nn::forward(agent.actor, tr.o_prev.features);
    const WeightVector action = nn::softmax(fa.output);
    const nn::ForwardResult fq = nn::forward(agent.critic1, concat(tr.o_prev.features, action.values()));
    actor_loss -= fq.output[0] * inv_b;
    const double gq[1] = {-inv_b};
    std::vector<double> gin;
    nn::backward_accumulate(agent.critic1, fq.tape, gq, critic_scratch, &gin);
    const std::vector<double> g_logits =
        nn::softmax_backward(action.values(), std::span<const double>(gin).subspan(n_obs));
    nn::backward_accumulate(agent.actor, fa.tape, g_logits, actor_grad, nullptr);
  }
  nn::adam_step(agent.actor_opt, agent.actor.mutable_parameters(), actor_grad);
  nn::polyak_update(agent.actor_target, agent.actor, cfg.tau);
  nn::polyak_update(agent.critic1_target, agent.critic1, cfg.tau);
  nn::polyak_update(agent.critic2_target, agent.critic2, cfg.tau);
  ++agent.policy_update_count;
  diag.actor_loss = actor_loss;
  diag.did_policy_update = true;
  return diag;
}

void write_agent(std::ostream& out, const Td3Agent& agent) {
  out.write(kAgentMagic, 4);
  const std::uint32_t version = kAgentVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const nlohmann::json meta = {{"observation_size", agent.observation_size()},
                               {"assets", agent.assets()},
                               {"update_count", agent.update_count},
                               {"policy_update_count", agent.policy_update_count},
                               {"td3", config_json(agent.config())}};
  const std::string text = meta.dump();
  const auto len = static_cast<std::uint64_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const nn::DenseNet* net : {&agent.actor, &agent.actor_target, &agent.critic1, &agent.critic2,
                                  &agent.critic1_target, &agent.critic2_target}) {
    nn::write_binary(out, *net);
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing agent archive");
}

Td3Agent read_agent(std::istream& in) {
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kAgentMagic, 4) != 0) {
    throw Error(Errc::BadCheckpoint, "not an agent archive");
  }
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) || version != kAgentVersion) {
    throw Error(Errc::BadCheckpoint, "unsupported agent archive version");
  }
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1u << 24)) {
    throw Error(Errc::BadCheckpoint, "corrupt agent header");
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw Error(Errc::BadCheckpoint, "truncated agent header");
  }
  try {
    const nlohmann::json meta = nlohmann::json::parse(text);
    Td3Agent agent(meta.at("observation_size").get<std::size_t>(), meta.at("assets").get<std::size_t>(),
                   config_from_json(meta.at("td3")), 0);
    agent.update_count = meta.at("update_count");
    agent.policy_update_count = meta.at("policy_update_count");
    for (nn::DenseNet* net : {&agent.actor, &agent.actor_target, &agent.critic1, &agent.critic2,
                              &agent.critic1_target, &agent.critic2_target}) {
      nn::DenseNet loaded = nn::read_binary(in);
      if (!loaded.same_shape(*net)) throw Error(Errc::BadCheckpoint, "network shape mismatch in archive");
      *net = std::move(loaded);
    }
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCheckpoint, e.what());
  }
}

}  // namespace triad
