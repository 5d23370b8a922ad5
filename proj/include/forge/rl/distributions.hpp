#pragma once

#include "forge/randomization/rng.hpp"

namespace forge::rl {

/// Diagonal Gaussian over pre-squash pose actions. The environment receives
/// tanh(u); ratios are taken on u, where the squashing Jacobian cancels.
struct GaussianTerm {
  static double log_prob(double u, double mean, double log_std);
  /// d log_prob / d mean and d log_prob / d log_std.
  static void log_prob_grad(double u, double mean, double log_std, double& d_mean, double& d_log_std);
  static double entropy(double log_std);
};

/// Beta(alpha, beta) on [0, 1] for the success-prediction action.
struct BetaDist {
  double alpha = 1.0;
  double beta = 1.0;

  /// alpha, beta = 1 + softplus(raw): unimodal or flat, never U-shaped.
  static BetaDist from_raw(double raw_alpha, double raw_beta);
  /// d alpha / d raw (same map for beta).
  static double d_param_d_raw(double raw);

  static constexpr double kEdge = 1e-6;

  double mean() const { return alpha / (alpha + beta); }
  double sample(RandomStream& rng) const;
  /// Log density at x, with x clamped into [kEdge, 1 - kEdge].
  double log_prob(double x) const;
  void log_prob_grad(double x, double& d_alpha, double& d_beta) const;
  double entropy() const;
  void entropy_grad(double& d_alpha, double& d_beta) const;
};

}  // namespace forge::rl
