#pragma once

#include <cmath>
#include <numbers>

namespace forge {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Contact or commanded force in newtons.
using Force3 = Vec3;

/// Position plus rotation about the vertical axis. The only rotational
/// degree of freedom the task exposes is yaw; parts stay upright.
struct PoseYaw {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  Vec3 position() const { return {x, y, z}; }
  friend bool operator==(const PoseYaw&, const PoseYaw&) = default;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(yaw);
  }

  /// Pose `local` expressed in this frame, mapped to the world frame.
  PoseYaw compose(const PoseYaw& local) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {x + c * local.x - s * local.y, y + s * local.x + c * local.y, z + local.z,
            wrap_angle(yaw + local.yaw)};
  }
};

struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double wyaw = 0.0;

  Vec3 linear() const { return {vx, vy, vz}; }
  friend bool operator==(const Twist&, const Twist&) = default;
  bool finite() const {
    return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(vz) && std::isfinite(wyaw);
  }
};

/// Force plus torque about the vertical axis.
struct Wrench {
  Force3 force;
  double yaw_torque = 0.0;
};

}  // namespace forge
