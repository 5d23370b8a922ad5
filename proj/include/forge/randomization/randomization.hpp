#pragma once

#include <string>

#include "forge/core/types.hpp"
#include "forge/randomization/rng.hpp"

namespace forge::randomization {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double mid() const { return 0.5 * (lo + hi); }
  /// Throws std::invalid_argument naming `field` when lo > hi or either bound is not finite.
  void validate(const std::string& field) const;
};

/// Per-episode dynamics parameters (controller, robot and part properties).
struct DynamicsParams {
  double kp = 600.0;
  double action_scale = 0.02;  // m
  Force3 dead_zone{};          // N per axis
  double part_friction = 0.75;
  double force_threshold = 7.5;  // N
};

struct DynamicsRanges {
  Range kp{400.0, 800.0};
  Range action_scale{0.016, 0.025};
  Range dead_zone{0.0, 5.0};
  Range part_friction{0.5, 1.0};
  Range force_threshold{5.0, 10.0};

  void validate() const;
  bool contains(const DynamicsParams& p) const;
};

struct NoiseConfig {
  double fixed_pose_sigma = 0.0025;  // m, per axis, drawn once per episode (training)
  double force_sigma = 1.0;          // N, per axis, per step
  double ee_pos_sigma = 0.00025;     // m, per axis, per step
  double ee_yaw_sigma = 0.0;         // rad, per step

  void validate() const;
};

/// Initial-state ranges. Hand offsets are relative to the fixed tip; held
/// offsets are in the hand frame, with held z measured as how far the part's
/// top sits above the gripper's bottom face.
struct InitialStateRanges {
  Range fixed_x{0.55, 0.65};
  Range fixed_y{-0.05, 0.05};
  Range fixed_z{0.0, 0.1};
  Range hand_x{-0.02, 0.02};
  Range hand_y{-0.02, 0.02};
  Range hand_z{0.037, 0.057};
  Range hand_yaw{-0.7853981633974483, 0.7853981633974483};
  Range held_x{-0.003, 0.003};
  Range held_y{0.0, 0.0};
  Range held_z{0.014, 0.020};

  void validate() const;
};

struct InitialState {
  PoseYaw fixed_tip;     // top-centre of the socket
  PoseYaw ee;            // end-effector (gripper bottom face)
  PoseYaw grasp_offset;  // peg bottom-centre in the EE frame
};

DynamicsParams sample_dynamics(RandomStream& rng, const DynamicsRanges& ranges);

/// `fixed_height` is the height of the fixed part from its base to its tip.
InitialState sample_initial_state(RandomStream& rng, const InitialStateRanges& ranges, double fixed_height,
                                  double held_length);

/// Offset with norm uniform in [r_min, r_max] and isotropic direction.
Vec3 sample_pose_error(RandomStream& rng, double r_min, double r_max);

/// Per-axis Gaussian fixed-pose estimation error.
Vec3 sample_gaussian_pose_error(RandomStream& rng, double sigma);

/// Sensor readings the policy is allowed to see.
struct NoisyReadings {
  PoseYaw ee_pose;
  Twist ee_twist;
  Force3 force;
  PoseYaw fixed_tip_estimate;
};

/// Produces noisy observations for one episode. The fixed-tip estimate is
/// truth plus an offset frozen at episode start; EE pose and force receive
/// fresh Gaussian noise every call, and the velocity reading is the finite
/// difference of consecutive noisy poses.
class ObservationNoiser {
 public:
  ObservationNoiser() = default;
  ObservationNoiser(NoiseConfig cfg, double policy_dt) : cfg_(cfg), policy_dt_(policy_dt) {}

  /// Starts an episode; the first velocity reading is zero.
  NoisyReadings begin(const Vec3& fixed_offset, const PoseYaw& true_ee, const Force3& true_force,
                      const PoseYaw& true_fixed_tip, RandomStream& rng);
  NoisyReadings observe(const PoseYaw& true_ee, const Force3& true_force, const PoseYaw& true_fixed_tip,
                        RandomStream& rng);

  const Vec3& fixed_offset() const { return fixed_offset_; }

 private:
  PoseYaw noisy_pose(const PoseYaw& truth, RandomStream& rng) const;
  Force3 noisy_force(const Force3& truth, RandomStream& rng) const;
  PoseYaw fixed_estimate(const PoseYaw& truth) const;

  NoiseConfig cfg_{};
  double policy_dt_ = 1.0 / 15.0;
  Vec3 fixed_offset_{};
  PoseYaw previous_{};
};

}  // namespace forge::randomization
