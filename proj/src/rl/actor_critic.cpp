#include "forge/rl/actor_critic.hpp"

#include <cmath>
#include <stdexcept>

namespace forge::rl {

nn::NetworkSpec PolicyConfig::actor_spec() const {
  return {static_cast<int>(env::Observation::kSize), hidden, gru_size, kActorOutputs};
}

nn::NetworkSpec PolicyConfig::critic_spec() const {
  return {static_cast<int>(env::PrivilegedState::kSize), hidden, gru_size, 1};
}

void PolicyConfig::validate() const {
  actor_spec().validate();
  if (!std::isfinite(init_log_std)) throw std::invalid_argument("policy.init_log_std must be finite");
  if (!(head_gain > 0.0)) throw std::invalid_argument("policy.head_gain must be > 0");
}

env::Action PolicyOutput::mode() const {
  env::Action a;
  for (int i = 0; i < kPoseDims; ++i) a.pose[i] = std::tanh(mean[i]);
  a.termination = termination.mean();
  return a;
}

PolicyOutput decode_actor_output(const float* row, const std::vector<float>& log_std) {
  PolicyOutput p;
  for (int i = 0; i < kPoseDims; ++i) {
    p.mean[i] = row[i];
    p.log_std[i] = log_std[i];
  }
  p.termination = BetaDist::from_raw(row[kPoseDims], row[kPoseDims + 1]);
  return p;
}

ActorCritic::ActorCritic(const PolicyConfig& cfg, std::uint64_t seed)
    : config(cfg),
      actor(cfg.actor_spec()),
      critic(cfg.critic_spec()),
      log_std(kPoseDims, static_cast<float>(cfg.init_log_std)),
      obs_norm(env::Observation::kSize),
      priv_norm(env::PrivilegedState::kSize),
      value_norm(1) {
  cfg.validate();
  actor.init(mix64(seed ^ 0xac7012ULL), static_cast<float>(cfg.head_gain));
  critic.init(mix64(seed ^ 0xc217cULL), 1.0f);
}

PolicyStep policy_forward(const ActorCritic& ac, int steps, int batch, const std::vector<double>& raw_obs,
                          const std::vector<float>& hidden) {
  const std::size_t in = env::Observation::kSize;
  const std::size_t rows = static_cast<std::size_t>(steps) * batch;
  const std::size_t g = static_cast<std::size_t>(ac.config.gru_size);
  if (steps <= 0 || batch <= 0) throw std::invalid_argument("policy_forward: empty block");
  if (raw_obs.size() != rows * in) throw std::invalid_argument("policy_forward: observation size mismatch");
  if (hidden.size() != static_cast<std::size_t>(batch) * g) throw std::invalid_argument("policy_forward: hidden size mismatch");
  std::vector<float> x(rows * in);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(raw_obs[i]);
  ac.obs_norm.normalize(x.data(), x.data(), rows);
  std::vector<float> y(rows * kActorOutputs);
  nn::SequenceCache<float> cache;
  ac.actor.forward(steps, batch, x.data(), hidden.data(), nullptr, y.data(), cache);
  PolicyStep out;
  out.outputs.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.outputs.push_back(decode_actor_output(&y[r * kActorOutputs], ac.log_std));
  out.hidden.assign(cache.h_out.end() - static_cast<std::ptrdiff_t>(batch * g), cache.h_out.end());
  return out;
}

DeterministicPolicy::DeterministicPolicy(const ActorCritic& ac)
    : actor_(ac.actor),
      norm_(ac.obs_norm),
      log_std_(ac.log_std),
      hidden_(static_cast<std::size_t>(ac.config.gru_size), 0.0f),
      x_(env::Observation::kSize),
      y_(kActorOutputs) {}

void DeterministicPolicy::reset() { std::fill(hidden_.begin(), hidden_.end(), 0.0f); }

env::Action DeterministicPolicy::act(const env::Observation& obs, PolicyOutput* out) {
  const auto v = obs.to_vector();
  for (std::size_t i = 0; i < v.size(); ++i) x_[i] = static_cast<float>(v[i]);
  norm_.normalize(x_.data(), x_.data(), 1);
  actor_.step(1, x_.data(), hidden_.data(), nullptr, y_.data());
  const PolicyOutput p = decode_actor_output(y_.data(), log_std_);
  if (out != nullptr) *out = p;
  return p.mode();
}

}  // namespace forge::rl
