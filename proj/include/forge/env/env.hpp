#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forge/control/controller.hpp"
#include "forge/core/types.hpp"
#include "forge/env/reward.hpp"
#include "forge/randomization/randomization.hpp"
#include "forge/world/world.hpp"

namespace forge::env {

struct Action {
  control::PoseAction pose{};  // each in [-1, 1]
  double termination = 0.0;    // a_ET in [0, 1]

  Action clamped() const;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Actor input. Positions are relative to the estimated fixed tip, so the
/// frame anchor `fixed_tip_rel` is the zero pose by construction.
///
/// Flat layout (kSize = 21):
///   [0..3]   ee pose rel (x, y, z, yaw)
///   [4..7]   ee twist (vx, vy, vz, wyaw)
///   [8..10]  force estimate (fx, fy, fz)
///   [11..14] fixed tip rel (x, y, z, yaw)
///   [15..19] previous action (x, y, z, yaw, a_ET)
///   [20]     force threshold
struct Observation {
  static constexpr std::size_t kSize = 21;

  PoseYaw ee_pose_rel{};
  Twist ee_twist{};
  Force3 force{};
  PoseYaw fixed_tip_rel{};
  Action prev_action{};
  double force_threshold = 0.0;

  std::array<double, kSize> to_vector() const;
  static Observation from_vector(std::span<const double> v);
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Critic input: simulator truth at a step boundary.
///
/// Flat layout (kSize = 30):
///   [0..3]   ee pose rel true tip      [4..7]   ee twist
///   [8..11]  held pose rel true tip    [12..15] fixed tip (world)
///   [16..18] true contact force        [19..25] kp, lambda, dead zone xyz, friction, F_th
///   [26..28] fixed-pose estimation error   [29] time fraction
struct PrivilegedState {
  static constexpr std::size_t kSize = 30;

  PoseYaw ee_pose_rel{};
  Twist ee_twist{};
  PoseYaw held_pose_rel{};
  PoseYaw fixed_tip{};
  Force3 contact_force{};
  randomization::DynamicsParams dynamics{};
  Vec3 pose_error{};
  double time_fraction = 0.0;

  std::array<double, kSize> to_vector() const;
};

struct EnvConfig {
  world::TaskGeometry geometry{};
  world::PhysicsParams physics{};
  control::TargetLimits limits{};
  double yaw_gain_ratio = 0.01;
  randomization::DynamicsRanges dynamics{};
  randomization::InitialStateRanges initial_state{};
  randomization::NoiseConfig noise{};
  RewardConfig reward{};
  double physics_dt = 1.0 / 120.0;
  int decimation = 8;

  double policy_dt() const { return physics_dt * decimation; }
  void validate() const;
};

enum class PoseErrorMode { kGaussian, kRing };

/// Per-episode overrides used by evaluation.
struct EpisodeOptions {
  PoseErrorMode pose_error_mode = PoseErrorMode::kGaussian;
  double ring_min = 0.0;
  double ring_max = 0.0;
  std::optional<double> kp_override;
  std::optional<double> force_threshold_override;
};

struct StepInfo {
  bool success = false;
  bool place = false;
  /// Largest true contact-force norm over the physics sub-steps.
  double peak_force = 0.0;
  RewardBreakdown reward{};
  /// Per physics sub-step contact-force norm.
  std::vector<double> force_trace;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Peg-insertion episode engine: one episode at a time, single-threaded.
class PegInsertionEnv {
 public:
  explicit PegInsertionEnv(EnvConfig cfg);

  /// Starts episode `episode_index` of the run seeded by `master_seed`. All
  /// randomness for the episode comes from streams derived from that pair.
  Observation reset(std::uint64_t master_seed, std::uint64_t episode_index, const EpisodeOptions& options = {});

  /// Advances one policy step (decimation physics steps). Throws
  /// world::DivergenceError when the physics leaves its bounds.
  StepResult step(const Action& action);

  PrivilegedState privileged() const;

  const EnvConfig& config() const { return cfg_; }
  const world::SimState& sim_state() const { return state_; }
  const randomization::DynamicsParams& dynamics() const { return dynamics_; }
  const control::ControllerGains& gains() const { return gains_; }
  const PoseYaw& fixed_tip() const { return fixed_tip_; }
  const Vec3& pose_error() const { return noiser_.fixed_offset(); }
  int step_count() const { return step_count_; }
  bool done() const { return step_count_ >= cfg_.reward.episode_length; }

 private:
  Observation make_observation(const randomization::NoisyReadings& r) const;

  EnvConfig cfg_;
  world::SimState state_{};
  randomization::DynamicsParams dynamics_{};
  control::ControllerGains gains_{};
  PoseYaw fixed_tip_{};
  randomization::ObservationNoiser noiser_{};
  RandomStream obs_rng_{};
  Action prev_action_{};
  int step_count_ = 0;
  bool started_ = false;
};

}  // namespace forge::env
