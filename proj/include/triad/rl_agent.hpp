#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "triad/nn.hpp"
#include "triad/observation.hpp"
#include "triad/weights.hpp"

namespace triad {

/// One replay-memory element: (o_{t-1}, a^Final_{t-1}, a^RL_{t-1}, o_t, r_{t-1}).
struct Transition {
  Observation o_prev;
  WeightVector a_final;
  WeightVector a_rl;
  Observation o_next;
  double reward = 0.0;
};

/// Bounded FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  void clear();

  /// Indices (into at()) drawn uniformly without replacement.
  std::vector<std::size_t> sample(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

struct RewardConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.1;

  void validate() const;
};

/// Jensen-Shannon divergence with natural log; 0 log 0 = 0. Result in [0, ln 2].
double jensen_shannon(std::span<const double> p, std::span<const double> q);
inline double jensen_shannon(const WeightVector& p, const WeightVector& q) {
  return jensen_shannon(p.values(), q.values());
}

struct EpisodeReward {
  double j = 0.0;
  double j_r = 0.0;
  double j_js = 0.0;
};

/// J = lambda1 * J_r + lambda2 * J_JS with J_r = (log C0 + sum log r_t) / T and
/// J_JS = -(1/T) sum D_JS(a^RL_t || a^Final_t).
EpisodeReward episode_reward(std::span<const double> growth, std::span<const double> jsd_terms, double c0,
                             const RewardConfig& cfg);

/// Per-step summand lambda1 * log r_t - lambda2 * D_JS(a_rl || a_final).
double per_step_reward(double growth, const WeightVector& a_rl, const WeightVector& a_final,
                       const RewardConfig& cfg);

struct Td3Config {
  std::vector<std::size_t> hidden = {64, 64};
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t policy_delay = 2;
  double explore_sigma = 0.1;
  double smooth_sigma = 0.2;
  double smooth_clip = 0.5;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup = 1000;
  std::size_t updates_per_step = 1;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double reward_scale = 1.0;

  void validate() const;
};

/// TD3 actor with twin critics. The actor maps an observation to N logits;
/// the critics score concatenated (observation, weights).
class Td3Agent {
 public:
  Td3Agent() = default;
  Td3Agent(std::size_t observation_size, std::size_t assets, Td3Config config, std::uint64_t seed);

  /// Deterministic policy action softmax(actor(obs)).
  WeightVector select_action(const Observation& obs) const;
  /// Adds N(0, explore_sigma) noise to the logits before the softmax.
  WeightVector select_action(const Observation& obs, bool explore, std::mt19937_64& rng) const;

  std::size_t observation_size() const noexcept { return observation_size_; }
  std::size_t assets() const noexcept { return assets_; }
  const Td3Config& config() const noexcept { return config_; }

  nn::DenseNet actor, actor_target;
  nn::DenseNet critic1, critic2, critic1_target, critic2_target;
  nn::AdamState actor_opt, critic1_opt, critic2_opt;
  std::uint64_t update_count = 0;
  std::uint64_t policy_update_count = 0;
  std::mt19937_64 rng;

 private:
  std::size_t observation_size_ = 0;
  std::size_t assets_ = 0;
  Td3Config config_;
};

struct Td3Diagnostics {
  double critic_loss = 0.0;
  std::optional<double> actor_loss;
  bool did_policy_update = false;
  std::vector<double> target_q1;  // Q1'(o', a') per sampled transition
  std::vector<double> target_q2;
  std::vector<double> target_y;   // r + gamma * min(Q1', Q2')
};

/// One TD3 step on a minibatch drawn from `buffer` with the agent's generator.
Td3Diagnostics td3_update(Td3Agent& agent, const ReplayBuffer& buffer, std::size_t batch_size);

/// Versioned agent archive: config, counters, and the six networks.
void write_agent(std::ostream& out, const Td3Agent& agent);
Td3Agent read_agent(std::istream& in);

}  // namespace triad
