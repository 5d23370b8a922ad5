#pragma once

#include <span>
#include <vector>

#include "forge/core/types.hpp"

namespace forge::env {

struct KernelParams {
  double a = 50.0;
  double b = 2.0;
};

struct RewardConfig {
  KernelParams coarse{50.0, 2.0};
  KernelParams fine{100.0, 0.0};
  double contact_penalty = 0.2;   // beta, per newton above threshold
  double success_dist = 0.024;    // m below the fixed tip
  double place_dist = 0.0025;     // m above the fixed tip
  double lateral_tolerance = 0.002;  // m
  double place_bonus = 1.0;
  double success_bonus = 1.0;
  int episode_length = 150;
  /// Heights of the axial keypoints above the held part's bottom face (m).
  std::vector<double> keypoint_heights{0.0, 0.01, 0.02, 0.03};

  void validate() const;
};

/// K_{a,b}(d) = 1 / (e^{-a d} + b + e^{a d}).
double logistic_kernel(double d, double a, double b);

/// Mean distance between corresponding axial keypoints of the held part and
/// of the target pose. Both poses locate the part's bottom-centre.
double keypoint_distance(const PoseYaw& held, const PoseYaw& target, std::span<const double> keypoint_heights);

/// Held-part bottom pose at full insertion for a fixed tip and bore depth.
PoseYaw insertion_target(const PoseYaw& fixed_tip, double socket_depth);

struct PlaceSuccess {
  bool place = false;
  bool success = false;
};

/// Both predicates require the held part's axis within lateral_tolerance of
/// the fixed tip. Place: bottom below place_dist above the tip. Success:
/// bottom at least success_dist below the tip.
PlaceSuccess check_place_success(const PoseYaw& held, const PoseYaw& fixed_tip, const RewardConfig& cfg);

struct RewardBreakdown {
  double keypoint_coarse = 0.0;
  double keypoint_fine = 0.0;
  double place = 0.0;
  double success = 0.0;
  double contact_penalty = 0.0;  // <= 0
  double termination = 0.0;      // <= 0
  double total = 0.0;
};

/// -beta * max(0, |F| - F_th)
double contact_penalty(double force_norm, double force_threshold, double beta);

/// -|a_ET - y|
double termination_reward(double a_et, bool success_label);

RewardBreakdown compute_reward(const PoseYaw& held, const PoseYaw& fixed_tip, double socket_depth,
                               const RewardConfig& cfg, double force_norm, double force_threshold, double a_et);

}  // namespace forge::env
