#include "forge/rl/distributions.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>

namespace forge::rl {

namespace {

double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

double clamp_unit(double x) { return std::clamp(x, BetaDist::kEdge, 1.0 - BetaDist::kEdge); }

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

double GaussianTerm::log_prob(double u, double mean, double log_std) {
  const double z = (u - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

void GaussianTerm::log_prob_grad(double u, double mean, double log_std, double& d_mean, double& d_log_std) {
  const double inv_std = std::exp(-log_std);
  const double z = (u - mean) * inv_std;
  d_mean = z * inv_std;
  d_log_std = z * z - 1.0;
}

double GaussianTerm::entropy(double log_std) {
  return log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

BetaDist BetaDist::from_raw(double raw_alpha, double raw_beta) {
  return {1.0 + softplus(raw_alpha), 1.0 + softplus(raw_beta)};
}

double BetaDist::d_param_d_raw(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

double BetaDist::sample(RandomStream& rng) const {
  const double x = rng.gamma(alpha);
  const double y = rng.gamma(beta);
  return clamp_unit(x / (x + y));
}

double BetaDist::log_prob(double x) const {
  x = clamp_unit(x);
  return (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) - log_beta_fn(alpha, beta);
}

void BetaDist::log_prob_grad(double x, double& d_alpha, double& d_beta) const {
  x = clamp_unit(x);
  const double psi_ab = boost::math::digamma(alpha + beta);
  d_alpha = std::log(x) - boost::math::digamma(alpha) + psi_ab;
  d_beta = std::log1p(-x) - boost::math::digamma(beta) + psi_ab;
}

double BetaDist::entropy() const {
  const double ab = alpha + beta;
  return log_beta_fn(alpha, beta) - (alpha - 1.0) * boost::math::digamma(alpha) -
         (beta - 1.0) * boost::math::digamma(beta) + (ab - 2.0) * boost::math::digamma(ab);
}

void BetaDist::entropy_grad(double& d_alpha, double& d_beta) const {
  const double t_ab = (alpha + beta - 2.0) * boost::math::trigamma(alpha + beta);
  d_alpha = -(alpha - 1.0) * boost::math::trigamma(alpha) + t_ab;
  d_beta = -(beta - 1.0) * boost::math::trigamma(beta) + t_ab;
}

}  // namespace forge::rl
