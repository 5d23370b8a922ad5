#pragma once

#include <cstdint>
#include <vector>

#include "forge/nn/optim.hpp"
#include "forge/rl/actor_critic.hpp"

namespace forge::rl {

struct PpoConfig {
  int num_envs = 128;
  int horizon = 32;
  int epochs = 4;
  int minibatches = 4;
  double clip = 0.2;
  double entropy_coef = 1e-3;              // pose head
  double termination_entropy_coef = 1e-2;  // a_ET Beta head
  double value_coef = 0.5;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  bool lr_decay = true;
  double max_grad_norm = 1.0;

  void validate() const;
  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

/// One collection of `horizon` steps from `num_envs` environments. Arrays are
/// time-major: index (t * num_envs + e).
struct RolloutBuffer {
  int num_envs = 0;
  int horizon = 0;
  int gru_size = 0;

  std::vector<float> obs;   // normalized actor inputs
  std::vector<float> priv;  // normalized critic inputs
  std::vector<float> raw_obs;
  std::vector<float> raw_priv;
  std::vector<float> pre_squash;  // Gaussian sample u per pose dim
  std::vector<double> termination;
  std::vector<double> log_prob;
  std::vector<double> reward;
  std::vector<double> value;  // in return units
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> episode_start;
  std::vector<float> actor_h0;   // num_envs x gru_size at t = 0
  std::vector<float> critic_h0;
  std::vector<double> bootstrap;  // value after the last step, per env

  std::vector<double> advantages;
  std::vector<double> returns;

  void resize(int envs, int steps, int gru);
  std::size_t size() const { return static_cast<std::size_t>(num_envs) * horizon; }
  /// Fills advantages and returns from the stored rewards and values.
  void finish(double gamma, double lambda);
};

/// Per-sample clipped-surrogate loss (already divided by the sample count
/// through `weight`) with gradients w.r.t. the actor output row and log-std.
struct SurrogateSample {
  const double* pre_squash;  // 4 values
  double termination;
  double old_log_prob;
  double advantage;
};

struct SurrogateTerms {
  double loss = 0.0;
  double ratio = 1.0;
  double entropy = 0.0;
  double entropy_bonus = 0.0;  // coefficient-weighted entropy
  double log_prob = 0.0;
};

SurrogateTerms surrogate_loss(const double* actor_row, const double* log_std, const SurrogateSample& s, double clip,
                              double entropy_coef, double termination_entropy_coef, double weight, double* d_row,
                              double* d_log_std);

/// Joint log-probability of a stored action under an actor output row.
double action_log_prob(const double* actor_row, const double* log_std, const double* pre_squash, double termination);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

struct Optimizers {
  nn::Adam actor;
  nn::Adam log_std;
  nn::Adam critic;

  explicit Optimizers(const ActorCritic& ac);
  Optimizers() = default;
};

/// Runs the configured epochs of minibatch updates over a finished buffer.
/// Minibatches hold whole environment sequences. Throws std::runtime_error
/// on a non-finite loss.
UpdateStats ppo_update(ActorCritic& ac, RolloutBuffer& buf, const PpoConfig& cfg, double lr, Optimizers& opt,
                       RandomStream& rng);

}  // namespace forge::rl
