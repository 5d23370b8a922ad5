#include "forge/env/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace forge::env {

Action Action::clamped() const {
  Action a;
  for (std::size_t i = 0; i < pose.size(); ++i) a.pose[i] = std::clamp(pose[i], -1.0, 1.0);
  a.termination = std::clamp(termination, 0.0, 1.0);
  return a;
}

std::array<double, Observation::kSize> Observation::to_vector() const {
  return {ee_pose_rel.x,      ee_pose_rel.y,      ee_pose_rel.z,      ee_pose_rel.yaw,    ee_twist.vx,
          ee_twist.vy,        ee_twist.vz,        ee_twist.wyaw,      force.x,            force.y,
          force.z,            fixed_tip_rel.x,    fixed_tip_rel.y,    fixed_tip_rel.z,    fixed_tip_rel.yaw,
          prev_action.pose[0], prev_action.pose[1], prev_action.pose[2], prev_action.pose[3],
          prev_action.termination, force_threshold};
}

Observation Observation::from_vector(std::span<const double> v) {
  if (v.size() != kSize) throw std::invalid_argument("Observation::from_vector: wrong length");
  Observation o;
  o.ee_pose_rel = {v[0], v[1], v[2], v[3]};
  o.ee_twist = {v[4], v[5], v[6], v[7]};
  o.force = {v[8], v[9], v[10]};
  o.fixed_tip_rel = {v[11], v[12], v[13], v[14]};
  o.prev_action.pose = {v[15], v[16], v[17], v[18]};
  o.prev_action.termination = v[19];
  o.force_threshold = v[20];
  return o;
}

std::array<double, PrivilegedState::kSize> PrivilegedState::to_vector() const {
  return {ee_pose_rel.x,   ee_pose_rel.y,   ee_pose_rel.z,     ee_pose_rel.yaw,     ee_twist.vx,
          ee_twist.vy,     ee_twist.vz,     ee_twist.wyaw,     held_pose_rel.x,     held_pose_rel.y,
          held_pose_rel.z, held_pose_rel.yaw, fixed_tip.x,     fixed_tip.y,         fixed_tip.z,
          fixed_tip.yaw,   contact_force.x, contact_force.y,   contact_force.z,     dynamics.kp,
          dynamics.action_scale, dynamics.dead_zone.x, dynamics.dead_zone.y, dynamics.dead_zone.z,
          dynamics.part_friction, dynamics.force_threshold, pose_error.x, pose_error.y, pose_error.z,
          time_fraction};
}

void EnvConfig::validate() const {
  geometry.validate();
  physics.validate();
  dynamics.validate();
  initial_state.validate();
  noise.validate();
  reward.validate();
  if (!(physics_dt > 0.0) || physics_dt > 1.0 / 60.0) throw std::invalid_argument("physics_dt must lie in (0, 1/60]");
  if (decimation <= 0) throw std::invalid_argument("decimation must be positive");
  if (!(limits.position_bound > 0.0) || !(limits.yaw_bound >= 0.0) || !(limits.yaw_step_clip >= 0.0))
    throw std::invalid_argument("controller limits must be positive");
  if (!(yaw_gain_ratio > 0.0)) throw std::invalid_argument("yaw_gain_ratio must be > 0");
}

PegInsertionEnv::PegInsertionEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  noiser_ = randomization::ObservationNoiser(cfg_.noise, cfg_.policy_dt());
}

namespace {

PoseYaw relative(const PoseYaw& p, const PoseYaw& frame) {
  return {p.x - frame.x, p.y - frame.y, p.z - frame.z, wrap_angle(p.yaw - frame.yaw)};
}

}  // namespace

Observation PegInsertionEnv::reset(std::uint64_t master_seed, std::uint64_t episode_index,
                                   const EpisodeOptions& options) {
  RandomStream episode_rng(master_seed, StreamKind::kEpisode, episode_index);
  obs_rng_ = RandomStream(master_seed, StreamKind::kObservation, episode_index);

  // draw order is fixed so that overrides never shift later samples
  dynamics_ = randomization::sample_dynamics(episode_rng, cfg_.dynamics);
  const auto init = randomization::sample_initial_state(episode_rng, cfg_.initial_state, cfg_.geometry.socket_depth,
                                                        cfg_.geometry.peg_length);
  const Vec3 gaussian_error = randomization::sample_gaussian_pose_error(episode_rng, cfg_.noise.fixed_pose_sigma);
  const Vec3 ring_error = randomization::sample_pose_error(episode_rng, options.ring_min, options.ring_max);
  const Vec3 pose_error = options.pose_error_mode == PoseErrorMode::kRing ? ring_error : gaussian_error;

  if (options.kp_override) dynamics_.kp = *options.kp_override;
  if (options.force_threshold_override) dynamics_.force_threshold = *options.force_threshold_override;

  fixed_tip_ = init.fixed_tip;
  cfg_.geometry.socket_top_pose = fixed_tip_;
  gains_ = control::ControllerGains::from_stiffness(dynamics_.kp, dynamics_.action_scale, cfg_.yaw_gain_ratio);

  state_ = world::SimState{};
  state_.ee_pose = init.ee;
  state_.grasp_offset = init.grasp_offset;
  state_.sync_held_pose();
  state_.contact_force = world::contact_forces(state_, cfg_.geometry, dynamics_.part_friction);

  prev_action_ = Action{};
  step_count_ = 0;
  started_ = true;
  const auto readings = noiser_.begin(pose_error, state_.ee_pose, state_.contact_force, fixed_tip_, obs_rng_);
  return make_observation(readings);
}

Observation PegInsertionEnv::make_observation(const randomization::NoisyReadings& r) const {
  Observation o;
  o.ee_pose_rel = relative(r.ee_pose, r.fixed_tip_estimate);
  o.ee_twist = r.ee_twist;
  o.force = r.force;
  o.fixed_tip_rel = PoseYaw{};
  o.prev_action = prev_action_;
  o.force_threshold = dynamics_.force_threshold;
  return o;
}

StepResult PegInsertionEnv::step(const Action& action) {
  if (!started_) throw std::logic_error("PegInsertionEnv::step called before reset");
  if (done()) throw std::logic_error("PegInsertionEnv::step called on a finished episode");

  const Action a = action.clamped();
  const Vec3& err = noiser_.fixed_offset();
  const PoseYaw fixed_estimate{fixed_tip_.x + err.x, fixed_tip_.y + err.y, fixed_tip_.z + err.z, fixed_tip_.yaw};
  const PoseYaw target =
      control::compute_target_pose(a.pose, fixed_estimate, state_.ee_pose, dynamics_.action_scale, cfg_.limits);

  StepResult out;
  out.info.force_trace.reserve(static_cast<std::size_t>(cfg_.decimation));
  for (int i = 0; i < cfg_.decimation; ++i) {
    Wrench w = control::impedance_wrench(target, state_.ee_pose, state_.ee_twist, gains_);
    w.force = world::apply_dead_zone(w.force, dynamics_.dead_zone);
    state_ = world::step_physics(state_, w, cfg_.geometry, cfg_.physics, dynamics_.part_friction, cfg_.physics_dt);
    out.info.force_trace.push_back(state_.peak_contact_force);
    out.info.peak_force = std::max(out.info.peak_force, state_.peak_contact_force);
  }
  ++step_count_;

  out.info.reward = compute_reward(state_.held_pose, fixed_tip_, cfg_.geometry.socket_depth, cfg_.reward,
                                   out.info.peak_force, dynamics_.force_threshold, a.termination);
  const PlaceSuccess ps = check_place_success(state_.held_pose, fixed_tip_, cfg_.reward);
  out.info.place = ps.place;
  out.info.success = ps.success;
  out.reward = out.info.reward.total;
  out.done = done();

  prev_action_ = a;
  const auto readings = noiser_.observe(state_.ee_pose, state_.contact_force, fixed_tip_, obs_rng_);
  out.observation = make_observation(readings);
  return out;
}

PrivilegedState PegInsertionEnv::privileged() const {
  PrivilegedState p;
  p.ee_pose_rel = relative(state_.ee_pose, fixed_tip_);
  p.ee_twist = state_.ee_twist;
  p.held_pose_rel = relative(state_.held_pose, fixed_tip_);
  p.fixed_tip = fixed_tip_;
  p.contact_force = state_.contact_force;
  p.dynamics = dynamics_;
  p.pose_error = noiser_.fixed_offset();
  p.time_fraction = static_cast<double>(step_count_) / cfg_.reward.episode_length;
  return p;
}

}  // namespace forge::env
