#pragma once

#include <array>

#include "forge/core/types.hpp"

namespace forge::control {

/// 2 * sqrt(kp). Throws std::invalid_argument for kp <= 0.
double critically_damped(double kp);

struct ControllerGains {
  double kp_lin = 0.0;
  double kd_lin = 0.0;
  double kp_yaw = 0.0;
  double kd_yaw = 0.0;
  double action_scale = 0.0;  // lambda, m

  /// Linear stiffness `kp`, yaw stiffness kp * yaw_ratio, both critically damped.
  static ControllerGains from_stiffness(double kp, double action_scale, double yaw_ratio = 0.01);
};

/// Bounds on how far targets may be placed.
struct TargetLimits {
  double position_bound = 0.05;  // m, action +-1 maps to +-bound from the fixed tip
  double yaw_bound = 1.5707963267948966;  // rad, action +-1 maps to +-bound
  double yaw_step_clip = 0.1;     // rad, max yaw distance from the current EE yaw
};

/// Pose action in [-1, 1]^4: (x, y, z, yaw).
using PoseAction = std::array<double, 4>;

/// Maps a normalized action to an absolute target relative to the estimated
/// fixed tip, then clips each axis to lie within `action_scale` (yaw: within
/// `yaw_step_clip`) of the current EE pose.
PoseYaw compute_target_pose(const PoseAction& action, const PoseYaw& fixed_tip_estimate, const PoseYaw& ee_pose,
                            double action_scale, const TargetLimits& limits = {});

/// F = kp (target - p) - kd v, torque likewise on the shortest yaw difference.
Wrench impedance_wrench(const PoseYaw& target, const PoseYaw& ee_pose, const Twist& ee_twist,
                        const ControllerGains& gains);

}  // namespace forge::control
