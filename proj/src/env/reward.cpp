#include "forge/env/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace forge::env {

void RewardConfig::validate() const {
  if (!(coarse.a > 0.0) || !(fine.a > 0.0)) throw std::invalid_argument("reward: kernel a must be > 0");
  if (!(coarse.b >= 0.0) || !(fine.b >= 0.0)) throw std::invalid_argument("reward: kernel b must be >= 0");
  if (!(contact_penalty >= 0.0)) throw std::invalid_argument("reward.contact_penalty must be >= 0");
  if (!(success_dist > 0.0) || !(place_dist >= 0.0)) throw std::invalid_argument("reward: distances must be >= 0");
  if (!(lateral_tolerance > 0.0)) throw std::invalid_argument("reward.lateral_tolerance must be > 0");
  if (episode_length <= 0) throw std::invalid_argument("reward.episode_length must be > 0");
  if (keypoint_heights.empty()) throw std::invalid_argument("reward.keypoint_heights must not be empty");
}

double logistic_kernel(double d, double a, double b) {
  return 1.0 / (std::exp(-a * d) + b + std::exp(a * d));
}

double keypoint_distance(const PoseYaw& held, const PoseYaw& target, std::span<const double> heights) {
  if (heights.empty()) throw std::invalid_argument("keypoint_distance: need at least one keypoint");
  // upright parts: axial keypoints differ by the same translation, yaw drops out
  double sum = 0.0;
  for (double h : heights) {
    const Vec3 k_held{held.x, held.y, held.z + h};
    const Vec3 k_targ{target.x, target.y, target.z + h};
    sum += (k_held - k_targ).norm();
  }
  return sum / static_cast<double>(heights.size());
}

PoseYaw insertion_target(const PoseYaw& fixed_tip, double socket_depth) {
  return {fixed_tip.x, fixed_tip.y, fixed_tip.z - socket_depth, fixed_tip.yaw};
}

PlaceSuccess check_place_success(const PoseYaw& held, const PoseYaw& fixed_tip, const RewardConfig& cfg) {
  const double lateral = std::hypot(held.x - fixed_tip.x, held.y - fixed_tip.y);
  const double rel_z = held.z - fixed_tip.z;
  const bool centered = lateral < cfg.lateral_tolerance;
  return {centered && rel_z < cfg.place_dist, centered && rel_z <= -cfg.success_dist};
}

double contact_penalty(double force_norm, double force_threshold, double beta) {
  return -beta * std::max(0.0, force_norm - force_threshold);
}

double termination_reward(double a_et, bool success_label) {
  return -std::abs(a_et - (success_label ? 1.0 : 0.0));
}

RewardBreakdown compute_reward(const PoseYaw& held, const PoseYaw& fixed_tip, double socket_depth,
                               const RewardConfig& cfg, double force_norm, double force_threshold, double a_et) {
  RewardBreakdown r;
  const double d = keypoint_distance(held, insertion_target(fixed_tip, socket_depth), cfg.keypoint_heights);
  r.keypoint_coarse = logistic_kernel(d, cfg.coarse.a, cfg.coarse.b);
  r.keypoint_fine = logistic_kernel(d, cfg.fine.a, cfg.fine.b);
  const PlaceSuccess ps = check_place_success(held, fixed_tip, cfg);
  r.place = ps.place ? cfg.place_bonus : 0.0;
  r.success = ps.success ? cfg.success_bonus : 0.0;
  r.contact_penalty = contact_penalty(force_norm, force_threshold, cfg.contact_penalty);
  r.termination = termination_reward(a_et, ps.success);
  r.total = r.keypoint_coarse + r.keypoint_fine + r.place + r.success + r.contact_penalty + r.termination;
  return r;
}

}  // namespace forge::env
