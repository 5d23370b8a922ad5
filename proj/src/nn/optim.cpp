#include "forge/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/simd/kernels.hpp"

namespace forge::nn {

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0f), v_(n, 0.0f) {}

void Adam::step(std::span<float> params, std::span<const float> grads, float lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adam: size mismatch");
  ++t_;
  const float bias1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_)));
  const float bias2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_)));
  simd::adam_update<float>(params.size(), params.data(), grads.data(), m_.data(), v_.data(), lr, cfg_.beta1,
                           cfg_.beta2, cfg_.eps, bias1, bias2);
}

double clip_grad_norm(std::span<const std::span<float>> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (float x : g) sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float scale = static_cast<float>(max_norm / (norm + 1e-6));
    for (const auto& g : grads) {
      for (float& x : g) x *= scale;
    }
  }
  return norm;
}

RunningMeanStd::RunningMeanStd(std::size_t dim, double epsilon_count)
    : mean_(dim, 0.0), var_(dim, 1.0), count_(epsilon_count) {}

void RunningMeanStd::update(const float* rows, std::size_t count) {
  if (count == 0) return;
  const std::size_t d = dim();
  std::vector<double> bm(d, 0.0), bv(d, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) bm[j] += rows[i * d + j];
  }
  for (std::size_t j = 0; j < d; ++j) bm[j] /= static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double e = rows[i * d + j] - bm[j];
      bv[j] += e * e;
    }
  }
  const double n = static_cast<double>(count);
  const double total = count_ + n;
  for (std::size_t j = 0; j < d; ++j) {
    bv[j] /= n;
    const double delta = bm[j] - mean_[j];
    const double m2 = var_[j] * count_ + bv[j] * n + delta * delta * count_ * n / total;
    mean_[j] += delta * n / total;
    var_[j] = m2 / total;
  }
  count_ = total;
}

void RunningMeanStd::normalize(const float* x, float* out, std::size_t count, float clip) const {
  const std::size_t d = dim();
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (x[i * d + j] - mean_[j]) / std::sqrt(var_[j] + 1e-8);
      out[i * d + j] = static_cast<float>(std::clamp(z, -static_cast<double>(clip), static_cast<double>(clip)));
    }
  }
}

float RunningMeanStd::normalize_scalar(float x) const {
  return static_cast<float>((x - mean_[0]) / std::sqrt(var_[0] + 1e-8));
}

float RunningMeanStd::denormalize_scalar(float x) const {
  return static_cast<float>(x * std::sqrt(var_[0] + 1e-8) + mean_[0]);
}

}  // namespace forge::nn
