#include "forge/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace forge::world {

void TaskGeometry::validate() const {
  if (!(peg_radius > 0.0)) throw std::invalid_argument("geometry.peg_radius must be > 0");
  if (!(socket_inner_radius > peg_radius))
    throw std::invalid_argument("geometry.socket_inner_radius must exceed peg_radius");
  if (!(socket_depth > 0.0)) throw std::invalid_argument("geometry.socket_depth must be > 0");
  if (!(peg_length > socket_depth))
    throw std::invalid_argument("geometry.peg_length must exceed socket_depth");
  if (!(contact_stiffness > 0.0)) throw std::invalid_argument("geometry.contact_stiffness must be > 0");
  if (!(contact_damping >= 0.0)) throw std::invalid_argument("geometry.contact_damping must be >= 0");
  if (!(friction_reg_velocity > 0.0))
    throw std::invalid_argument("geometry.friction_reg_velocity must be > 0");
}

void PhysicsParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("physics.mass must be > 0");
  if (!(yaw_inertia > 0.0)) throw std::invalid_argument("physics.yaw_inertia must be > 0");
  if (!(linear_damping >= 0.0) || !(yaw_damping >= 0.0))
    throw std::invalid_argument("physics damping must be >= 0");
  if (!(max_contact_dt > 0.0)) throw std::invalid_argument("physics.max_contact_dt must be > 0");
  if (!(max_abs_position > 0.0) || !(max_abs_velocity > 0.0))
    throw std::invalid_argument("physics divergence bounds must be > 0");
}

Vec3 SimState::held_velocity() const {
  const double rx = held_pose.x - ee_pose.x;
  const double ry = held_pose.y - ee_pose.y;
  return {ee_twist.vx - ee_twist.wyaw * ry, ee_twist.vy + ee_twist.wyaw * rx, ee_twist.vz};
}

namespace {

struct Feature {
  Vec3 normal;
  double depth;
};

void accumulate(const Feature& f, const Vec3& v, const TaskGeometry& geom, double mu, ContactDetail& out) {
  const double vn = v.dot(f.normal);
  const double fn = std::max(0.0, geom.contact_stiffness * f.depth - geom.contact_damping * vn);
  out.in_contact = true;
  if (fn <= 0.0) return;
  out.normal_force += f.normal * fn;
  const Vec3 vt = v - f.normal * vn;
  const double speed = vt.norm();
  if (speed > 0.0 && mu > 0.0) {
    const double mag = mu * fn * std::tanh(speed / geom.friction_reg_velocity);
    out.friction_force -= vt * (mag / speed);
  }
}

}  // namespace

ContactDetail contact_detail(const SimState& state, const TaskGeometry& geom, double friction_coeff) {
  ContactDetail out;
  const PoseYaw& top = geom.socket_top_pose;
  const double dx = state.held_pose.x - top.x;
  const double dy = state.held_pose.y - top.y;
  const double dz = state.held_pose.z - top.z;
  if (dz >= 0.0) return out;

  const Vec3 v = state.held_velocity();
  const double radial = std::hypot(dx, dy);
  const double wall_overlap = radial + geom.peg_radius - geom.socket_inner_radius;
  if (wall_overlap > 0.0) {
    const double rim_depth = -dz;
    if (rim_depth <= wall_overlap) {
      accumulate({{0.0, 0.0, 1.0}, rim_depth}, v, geom, friction_coeff, out);
    } else {
      // wall_overlap > 0 implies radial > clearance > 0
      accumulate({{-dx / radial, -dy / radial, 0.0}, wall_overlap}, v, geom, friction_coeff, out);
    }
  }
  const double floor_depth = -geom.socket_depth - dz;
  if (floor_depth > 0.0) {
    accumulate({{0.0, 0.0, 1.0}, floor_depth}, v, geom, friction_coeff, out);
  }
  return out;
}

Force3 apply_dead_zone(const Force3& f, const Force3& dz) {
  auto axis = [](double in, double band) {
    const double mag = std::max(0.0, std::abs(in) - band);
    return std::copysign(mag, in);
  };
  return {axis(f.x, dz.x), axis(f.y, dz.y), axis(f.z, dz.z)};
}

double mechanical_energy(const SimState& s, const TaskGeometry& geom, const PhysicsParams& params) {
  const Vec3 v = s.ee_twist.linear();
  double e = 0.5 * params.mass * v.dot(v) + 0.5 * params.yaw_inertia * s.ee_twist.wyaw * s.ee_twist.wyaw;
  const PoseYaw& top = geom.socket_top_pose;
  const double dx = s.held_pose.x - top.x;
  const double dy = s.held_pose.y - top.y;
  const double dz = s.held_pose.z - top.z;
  if (dz < 0.0) {
    const double wall_overlap = std::hypot(dx, dy) + geom.peg_radius - geom.socket_inner_radius;
    if (wall_overlap > 0.0) {
      const double d = std::min(-dz, wall_overlap);
      e += 0.5 * geom.contact_stiffness * d * d;
    }
    const double floor_depth = -geom.socket_depth - dz;
    if (floor_depth > 0.0) e += 0.5 * geom.contact_stiffness * floor_depth * floor_depth;
  }
  return e;
}

namespace {

void check_bounds(const SimState& s, const PhysicsParams& p) {
  const double pos = std::max({std::abs(s.ee_pose.x), std::abs(s.ee_pose.y), std::abs(s.ee_pose.z)});
  const double vel = std::max({std::abs(s.ee_twist.vx), std::abs(s.ee_twist.vy), std::abs(s.ee_twist.vz)});
  if (!s.ee_pose.finite() || !s.ee_twist.finite() || pos > p.max_abs_position || vel > p.max_abs_velocity) {
    std::ostringstream msg;
    msg << "physics diverged at t=" << s.time << "s: ee=(" << s.ee_pose.x << ", " << s.ee_pose.y << ", "
        << s.ee_pose.z << ") v=(" << s.ee_twist.vx << ", " << s.ee_twist.vy << ", " << s.ee_twist.vz << ")";
    throw DivergenceError(msg.str());
  }
}

}  // namespace

SimState step_physics(const SimState& state, const Wrench& applied, const TaskGeometry& geom,
                      const PhysicsParams& params, double friction_coeff, double dt) {
  if (!(dt > 0.0) || dt > 1.0 / 60.0 + 1e-15) {
    throw std::invalid_argument("step_physics: dt must lie in (0, 1/60] s");
  }
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / params.max_contact_dt - 1e-9)));
  const double h = dt / substeps;

  SimState s = state;
  s.sync_held_pose();
  s.peak_contact_force = 0.0;
  for (int i = 0; i < substeps; ++i) {
    const ContactDetail c = contact_detail(s, geom, friction_coeff);
    Vec3 v = s.ee_twist.linear();
    const Vec3 non_friction = applied.force + c.normal_force - v * params.linear_damping;
    Vec3 v_pred = v + non_friction * (h / params.mass);

    Force3 friction = c.friction_force;
    const double f_mag = friction.norm();
    if (f_mag > 0.0) {
      // friction opposes slip along -friction; it may at most stop that slip
      const Vec3 slip_dir = friction * (-1.0 / f_mag);
      const double slip = std::max(0.0, v_pred.dot(slip_dir));
      const double limit = params.mass * slip / h;
      if (f_mag > limit) friction *= limit / f_mag;
    }
    v = v_pred + friction * (h / params.mass);

    const Force3 contact = c.normal_force + friction;
    const double rx = s.held_pose.x - s.ee_pose.x;
    const double ry = s.held_pose.y - s.ee_pose.y;
    const double contact_torque = rx * contact.y - ry * contact.x;
    double w = s.ee_twist.wyaw;
    w += h * (applied.yaw_torque + contact_torque - params.yaw_damping * w) / params.yaw_inertia;

    s.ee_twist = {v.x, v.y, v.z, w};
    s.ee_pose.x += h * v.x;
    s.ee_pose.y += h * v.y;
    s.ee_pose.z += h * v.z;
    s.ee_pose.yaw = wrap_angle(s.ee_pose.yaw + h * w);
    s.sync_held_pose();
    s.contact_force = contact;
    s.peak_contact_force = std::max(s.peak_contact_force, contact.norm());
    s.time = state.time + dt * static_cast<double>(i + 1) / substeps;
    check_bounds(s, params);
  }
  return s;
}

}  // namespace forge::world
