#include "forge/randomization/randomization.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace forge::randomization {

void Range::validate(const std::string& field) const {
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument(field + ": bounds must be finite");
  if (lo > hi) throw std::invalid_argument(field + ": low bound exceeds high bound");
}

void DynamicsRanges::validate() const {
  kp.validate("randomization.kp");
  action_scale.validate("randomization.action_scale");
  dead_zone.validate("randomization.dead_zone");
  part_friction.validate("randomization.part_friction");
  force_threshold.validate("randomization.force_threshold");
  if (!(kp.lo > 0.0)) throw std::invalid_argument("randomization.kp: gains must be positive");
  if (!(action_scale.lo > 0.0)) throw std::invalid_argument("randomization.action_scale: must be positive");
  if (dead_zone.lo < 0.0) throw std::invalid_argument("randomization.dead_zone: must be >= 0");
  if (part_friction.lo < 0.0) throw std::invalid_argument("randomization.part_friction: must be >= 0");
  if (force_threshold.lo < 0.0) throw std::invalid_argument("randomization.force_threshold: must be >= 0");
}

bool DynamicsRanges::contains(const DynamicsParams& p) const {
  return kp.contains(p.kp) && action_scale.contains(p.action_scale) && dead_zone.contains(p.dead_zone.x) &&
         dead_zone.contains(p.dead_zone.y) && dead_zone.contains(p.dead_zone.z) &&
         part_friction.contains(p.part_friction) && force_threshold.contains(p.force_threshold);
}

void NoiseConfig::validate() const {
  if (!(fixed_pose_sigma >= 0.0) || !(force_sigma >= 0.0) || !(ee_pos_sigma >= 0.0) || !(ee_yaw_sigma >= 0.0)) {
    throw std::invalid_argument("noise: all sigmas must be >= 0");
  }
}

void InitialStateRanges::validate() const {
  fixed_x.validate("initial_state.fixed_x");
  fixed_y.validate("initial_state.fixed_y");
  fixed_z.validate("initial_state.fixed_z");
  hand_x.validate("initial_state.hand_x");
  hand_y.validate("initial_state.hand_y");
  hand_z.validate("initial_state.hand_z");
  hand_yaw.validate("initial_state.hand_yaw");
  held_x.validate("initial_state.held_x");
  held_y.validate("initial_state.held_y");
  held_z.validate("initial_state.held_z");
}

DynamicsParams sample_dynamics(RandomStream& rng, const DynamicsRanges& r) {
  DynamicsParams p;
  p.kp = rng.uniform(r.kp.lo, r.kp.hi);
  p.action_scale = rng.uniform(r.action_scale.lo, r.action_scale.hi);
  p.dead_zone.x = rng.uniform(r.dead_zone.lo, r.dead_zone.hi);
  p.dead_zone.y = rng.uniform(r.dead_zone.lo, r.dead_zone.hi);
  p.dead_zone.z = rng.uniform(r.dead_zone.lo, r.dead_zone.hi);
  p.part_friction = rng.uniform(r.part_friction.lo, r.part_friction.hi);
  p.force_threshold = rng.uniform(r.force_threshold.lo, r.force_threshold.hi);
  return p;
}

InitialState sample_initial_state(RandomStream& rng, const InitialStateRanges& r, double fixed_height,
                                  double held_length) {
  InitialState s;
  s.fixed_tip = {rng.uniform(r.fixed_x.lo, r.fixed_x.hi), rng.uniform(r.fixed_y.lo, r.fixed_y.hi),
                 rng.uniform(r.fixed_z.lo, r.fixed_z.hi) + fixed_height, 0.0};
  s.ee = {s.fixed_tip.x + rng.uniform(r.hand_x.lo, r.hand_x.hi), s.fixed_tip.y + rng.uniform(r.hand_y.lo, r.hand_y.hi),
          s.fixed_tip.z + rng.uniform(r.hand_z.lo, r.hand_z.hi),
          wrap_angle(s.fixed_tip.yaw + rng.uniform(r.hand_yaw.lo, r.hand_yaw.hi))};
  const double held_x = rng.uniform(r.held_x.lo, r.held_x.hi);
  const double held_y = rng.uniform(r.held_y.lo, r.held_y.hi);
  const double held_z = rng.uniform(r.held_z.lo, r.held_z.hi);
  // part top sits held_z above the gripper face, its bottom held_length below that
  s.grasp_offset = {held_x, held_y, held_z - held_length, 0.0};
  return s;
}

Vec3 sample_pose_error(RandomStream& rng, double r_min, double r_max) {
  if (!(r_min >= 0.0) || r_min > r_max) throw std::invalid_argument("sample_pose_error: need 0 <= r_min <= r_max");
  const double radius = rng.uniform(r_min, r_max);
  const double cos_theta = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {radius * sin_theta * std::cos(phi), radius * sin_theta * std::sin(phi), radius * cos_theta};
}

Vec3 sample_gaussian_pose_error(RandomStream& rng, double sigma) {
  return {rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma)};
}

PoseYaw ObservationNoiser::noisy_pose(const PoseYaw& t, RandomStream& rng) const {
  return {rng.normal(t.x, cfg_.ee_pos_sigma), rng.normal(t.y, cfg_.ee_pos_sigma), rng.normal(t.z, cfg_.ee_pos_sigma),
          wrap_angle(rng.normal(t.yaw, cfg_.ee_yaw_sigma))};
}

Force3 ObservationNoiser::noisy_force(const Force3& t, RandomStream& rng) const {
  return {rng.normal(t.x, cfg_.force_sigma), rng.normal(t.y, cfg_.force_sigma), rng.normal(t.z, cfg_.force_sigma)};
}

PoseYaw ObservationNoiser::fixed_estimate(const PoseYaw& truth) const {
  return {truth.x + fixed_offset_.x, truth.y + fixed_offset_.y, truth.z + fixed_offset_.z, truth.yaw};
}

NoisyReadings ObservationNoiser::begin(const Vec3& fixed_offset, const PoseYaw& true_ee, const Force3& true_force,
                                       const PoseYaw& true_fixed_tip, RandomStream& rng) {
  fixed_offset_ = fixed_offset;
  NoisyReadings out;
  out.ee_pose = noisy_pose(true_ee, rng);
  out.ee_twist = {};
  out.force = noisy_force(true_force, rng);
  out.fixed_tip_estimate = fixed_estimate(true_fixed_tip);
  previous_ = out.ee_pose;
  return out;
}

NoisyReadings ObservationNoiser::observe(const PoseYaw& true_ee, const Force3& true_force,
                                         const PoseYaw& true_fixed_tip, RandomStream& rng) {
  NoisyReadings out;
  out.ee_pose = noisy_pose(true_ee, rng);
  const double inv_dt = 1.0 / policy_dt_;
  out.ee_twist = {(out.ee_pose.x - previous_.x) * inv_dt, (out.ee_pose.y - previous_.y) * inv_dt,
                  (out.ee_pose.z - previous_.z) * inv_dt, wrap_angle(out.ee_pose.yaw - previous_.yaw) * inv_dt};
  out.force = noisy_force(true_force, rng);
  out.fixed_tip_estimate = fixed_estimate(true_fixed_tip);
  previous_ = out.ee_pose;
  return out;
}

}  // namespace forge::randomization
