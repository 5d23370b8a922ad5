#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace forge::nn {

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Adam over one flat parameter array.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig cfg = {});

  void step(std::span<float> params, std::span<const float> grads, float lr);

  std::int64_t steps() const { return t_; }
  std::vector<float>& first_moment() { return m_; }
  std::vector<float>& second_moment() { return v_; }
  const std::vector<float>& first_moment() const { return m_; }
  const std::vector<float>& second_moment() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<float> m_;
  std::vector<float> v_;
  std::int64_t t_ = 0;
};

/// Scales every gradient span so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<const std::span<float>> grads, double max_norm);

/// Per-feature running mean and variance (parallel-merge update).
class RunningMeanStd {
 public:
  RunningMeanStd() = default;
  explicit RunningMeanStd(std::size_t dim, double epsilon_count = 1e-4);

  std::size_t dim() const { return mean_.size(); }
  void update(const float* rows, std::size_t count);
  /// (x - mean) / sqrt(var + 1e-8), clipped to +-clip.
  void normalize(const float* x, float* out, std::size_t count, float clip = 10.0f) const;
  float normalize_scalar(float x) const;
  float denormalize_scalar(float x) const;

  std::vector<double>& mean() { return mean_; }
  std::vector<double>& var() { return var_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& var() const { return var_; }
  double count() const { return count_; }
  void set_count(double c) { count_ = c; }

 private:
  std::vector<double> mean_;
  std::vector<double> var_;
  double count_ = 0.0;
};

}  // namespace forge::nn
