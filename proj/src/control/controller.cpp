#include "forge/control/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace forge::control {

double critically_damped(double kp) {
  if (!(kp > 0.0)) throw std::invalid_argument("critically_damped: kp must be positive");
  return 2.0 * std::sqrt(kp);
}

ControllerGains ControllerGains::from_stiffness(double kp, double action_scale, double yaw_ratio) {
  if (!(action_scale > 0.0)) throw std::invalid_argument("action scale must be positive");
  ControllerGains g;
  g.kp_lin = kp;
  g.kd_lin = critically_damped(kp);
  g.kp_yaw = kp * yaw_ratio;
  g.kd_yaw = critically_damped(g.kp_yaw);
  g.action_scale = action_scale;
  return g;
}

PoseYaw compute_target_pose(const PoseAction& action, const PoseYaw& fixed_tip_estimate, const PoseYaw& ee_pose,
                            double action_scale, const TargetLimits& limits) {
  const PoseYaw candidate{fixed_tip_estimate.x + action[0] * limits.position_bound,
                          fixed_tip_estimate.y + action[1] * limits.position_bound,
                          fixed_tip_estimate.z + action[2] * limits.position_bound,
                          wrap_angle(fixed_tip_estimate.yaw + action[3] * limits.yaw_bound)};
  auto clip = [](double target, double current, double radius) {
    return current + std::clamp(target - current, -radius, radius);
  };
  return {clip(candidate.x, ee_pose.x, action_scale), clip(candidate.y, ee_pose.y, action_scale),
          clip(candidate.z, ee_pose.z, action_scale),
          wrap_angle(ee_pose.yaw + std::clamp(wrap_angle(candidate.yaw - ee_pose.yaw), -limits.yaw_step_clip,
                                              limits.yaw_step_clip))};
}

Wrench impedance_wrench(const PoseYaw& target, const PoseYaw& ee, const Twist& v, const ControllerGains& g) {
  Wrench w;
  w.force = {g.kp_lin * (target.x - ee.x) - g.kd_lin * v.vx, g.kp_lin * (target.y - ee.y) - g.kd_lin * v.vy,
             g.kp_lin * (target.z - ee.z) - g.kd_lin * v.vz};
  w.yaw_torque = g.kp_yaw * wrap_angle(target.yaw - ee.yaw) - g.kd_yaw * v.wyaw;
  return w;
}

}  // namespace forge::control
