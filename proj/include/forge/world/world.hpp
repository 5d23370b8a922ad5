#pragma once

#include <stdexcept>
#include <string>

#include "forge/core/types.hpp"

namespace forge::world {

/// Peg-and-socket geometry. The socket is a cylindrical bore in a plate whose
/// top face lies at `socket_top_pose.z`; the bore floor is `socket_depth`
/// below it. The plate is treated as unbounded laterally.
struct TaskGeometry {
  double peg_radius = 0.004;
  double peg_length = 0.050;
  double socket_inner_radius = 0.00425;
  double socket_depth = 0.025;
  PoseYaw socket_top_pose{};
  double contact_stiffness = 5000.0;  // N/m
  double contact_damping = 50.0;      // N s/m
  double friction_reg_velocity = 1e-3;  // m/s, tanh smoothing of Coulomb friction

  double clearance() const { return socket_inner_radius - peg_radius; }

  /// Throws std::invalid_argument on a non-physical geometry.
  void validate() const;
};

struct PhysicsParams {
  double mass = 0.5;           // kg
  double yaw_inertia = 0.05;   // kg m^2
  double linear_damping = 1.0;  // ambient viscous damping, N s/m
  double yaw_damping = 1e-3;    // N m s/rad
  double max_contact_dt = 1.0 / 480.0;
  double max_abs_position = 2.0;  // m
  double max_abs_velocity = 10.0;  // m/s

  void validate() const;
};

struct SimState {
  PoseYaw ee_pose{};
  Twist ee_twist{};
  /// Held part's bottom-centre frame relative to the end-effector.
  PoseYaw grasp_offset{};
  /// Always ee_pose.compose(grasp_offset); refreshed by step_physics.
  PoseYaw held_pose{};
  /// Last true contact reaction acting on the held part.
  Force3 contact_force{};
  /// Largest contact-force norm seen inside the most recent step_physics call.
  double peak_contact_force = 0.0;
  double time = 0.0;

  void sync_held_pose() { held_pose = ee_pose.compose(grasp_offset); }
  /// Linear velocity of the held part's bottom centre (rigid grasp).
  Vec3 held_velocity() const;
};

/// Breakdown of one contact evaluation.
struct ContactDetail {
  Force3 normal_force{};
  Force3 friction_force{};
  bool in_contact = false;

  Force3 total() const { return normal_force + friction_force; }
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Net penalty contact reaction on the peg from the socket plate and floor.
///
/// Two features are evaluated. The plate feature is active when the peg's
/// footprint overlaps plate material (radial extent past the bore wall) and
/// its bottom is below the plate top; it resolves along the shorter of two
/// separating directions: straight up (rim/top face) or radially toward the
/// bore axis (bore wall). The floor feature is active once the peg bottom is
/// below the bore floor. Each feature contributes a spring-damper normal
/// force clamped to be non-negative plus tanh-regularised Coulomb friction.
ContactDetail contact_detail(const SimState& state, const TaskGeometry& geom, double friction_coeff);

inline Force3 contact_forces(const SimState& state, const TaskGeometry& geom, double friction_coeff) {
  return contact_detail(state, geom, friction_coeff).total();
}

/// Advances the end-effector by `dt` with semi-implicit Euler. The applied
/// wrench is held constant over the step; contact is re-evaluated on
/// internal sub-steps no longer than `params.max_contact_dt`. Friction is
/// limited so that it cannot reverse the tangential velocity within a
/// sub-step. Throws DivergenceError when the state leaves the configured bounds.
SimState step_physics(const SimState& state, const Wrench& applied, const TaskGeometry& geom,
                      const PhysicsParams& params, double friction_coeff, double dt);

/// |out_i| = max(0, |in_i| - dz_i), sign preserved.
Force3 apply_dead_zone(const Force3& f_target, const Force3& dead_zone);

/// Kinetic energy plus stored penalty-spring energy (friction ignored).
double mechanical_energy(const SimState& state, const TaskGeometry& geom, const PhysicsParams& params);

}  // namespace forge::world
