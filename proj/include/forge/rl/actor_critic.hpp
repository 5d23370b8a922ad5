#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "forge/env/env.hpp"
#include "forge/nn/optim.hpp"
#include "forge/nn/recurrent_net.hpp"
#include "forge/rl/distributions.hpp"

namespace forge::rl {

inline constexpr int kPoseDims = 4;
/// Actor head: pose means (4), raw Beta parameters (2).
inline constexpr int kActorOutputs = kPoseDims + 2;

struct PolicyConfig {
  std::vector<int> hidden{64, 64};
  int gru_size = 64;
  double init_log_std = -0.5;
  double head_gain = 0.01;

  nn::NetworkSpec actor_spec() const;
  nn::NetworkSpec critic_spec() const;
  void validate() const;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Distribution parameters decoded from one actor output row.
struct PolicyOutput {
  std::array<double, kPoseDims> mean{};
  std::array<double, kPoseDims> log_std{};
  BetaDist termination{};

  /// Deterministic action: tanh of the mean and the Beta mean.
  env::Action mode() const;
};

PolicyOutput decode_actor_output(const float* row, const std::vector<float>& log_std);

/// Actor over observations, critic over privileged state, each with its own
/// input normalizer; the critic regresses normalized returns.
struct ActorCritic {
  ActorCritic() = default;
  ActorCritic(const PolicyConfig& cfg, std::uint64_t seed);

  PolicyConfig config;
  nn::RecurrentNet<float> actor;
  nn::RecurrentNet<float> critic;
  std::vector<float> log_std;
  nn::RunningMeanStd obs_norm;
  nn::RunningMeanStd priv_norm;
  nn::RunningMeanStd value_norm;
};

/// Result of one policy_forward call.
struct PolicyStep {
  std::vector<PolicyOutput> outputs;  // steps * batch, time-major
  std::vector<float> hidden;          // batch x gru_size after the last step
};

/// Runs the actor over a (steps x batch) block of raw observation vectors
/// starting from `hidden`. Pure: the network is not modified.
PolicyStep policy_forward(const ActorCritic& ac, int steps, int batch, const std::vector<double>& raw_obs,
                          const std::vector<float>& hidden);

/// Deterministic single-episode controller for evaluation.
class DeterministicPolicy {
 public:
  explicit DeterministicPolicy(const ActorCritic& ac);
  void reset();
  /// Returns the mode action and the decoded distribution.
  env::Action act(const env::Observation& obs, PolicyOutput* out = nullptr);

 private:
  nn::RecurrentNet<float> actor_;
  nn::RunningMeanStd norm_;
  std::vector<float> log_std_;
  std::vector<float> hidden_;
  std::vector<float> x_;
  std::vector<float> y_;
};

}  // namespace forge::rl
