#include "oracles.hpp"

#include <cmath>

#include "forge/control/controller.hpp"

namespace oracle {

double logistic_kernel(double d, double a, double b) {
  const long double x = static_cast<long double>(a) * d;
  return static_cast<double>(1.0L / (2.0L * std::cosh(x) + b));
}

double dead_zone(double in, double band) {
  if (in > band) return in - band;
  if (in < -band) return in + band;
  return 0.0;
}

double critical_damping(double kp) {
  double lo = 0.0, hi = 2.0 * kp + 2.0;  // discriminant kd^2 - 4 kp changes sign in [lo, hi]
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * mid - 4.0 * kp < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double contact_penalty(double f, double th, double beta) { return f <= th ? 0.0 : -beta * (f - th); }

double termination_reward(double a, bool y) { return y ? -(1.0 - a) : -a; }

namespace {

struct Probe {
  double x, y, z;  // peg bottom centre relative to the socket top
};

// Peg solid (radius r, extends upward from its bottom face) intersects the
// plate material around the bore.
bool overlaps_plate(const Probe& p, const forge::world::TaskGeometry& g) {
  return p.z < 0.0 && std::sqrt(p.x * p.x + p.y * p.y) + g.peg_radius > g.socket_inner_radius;
}

bool overlaps_floor(const Probe& p, const forge::world::TaskGeometry& g) { return p.z < -g.socket_depth; }

// Smallest shift t in [0, hi] along `dir` that ends the overlap; overlap must
// hold at 0 and not at hi.
template <class Pred>
double separation(Probe p, double dx, double dy, double dz, double hi, Pred overlaps) {
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const Probe q{p.x + mid * dx, p.y + mid * dy, p.z + mid * dz};
    if (overlaps(q)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

forge::Vec3 penalty(const forge::Vec3& n, double depth, const forge::Vec3& v, const forge::world::TaskGeometry& g,
                    double mu) {
  const double vn = v.x * n.x + v.y * n.y + v.z * n.z;
  const double fn = std::max(0.0, g.contact_stiffness * depth - g.contact_damping * vn);
  if (fn == 0.0) return {};
  forge::Vec3 f{n.x * fn, n.y * fn, n.z * fn};
  const forge::Vec3 vt{v.x - vn * n.x, v.y - vn * n.y, v.z - vn * n.z};
  const double s = std::sqrt(vt.x * vt.x + vt.y * vt.y + vt.z * vt.z);
  if (s > 0.0) {
    const double m = mu * fn * std::tanh(s / g.friction_reg_velocity) / s;
    f.x -= m * vt.x;
    f.y -= m * vt.y;
    f.z -= m * vt.z;
  }
  return f;
}

}  // namespace

forge::Vec3 contact_force(const forge::world::SimState& s, const forge::world::TaskGeometry& g, double mu) {
  const auto& top = g.socket_top_pose;
  const Probe p{s.held_pose.x - top.x, s.held_pose.y - top.y, s.held_pose.z - top.z};
  // bottom-centre velocity: v + w x r with r from the EE origin
  const double rx = s.held_pose.x - s.ee_pose.x, ry = s.held_pose.y - s.ee_pose.y;
  const forge::Vec3 v{s.ee_twist.vx - s.ee_twist.wyaw * ry, s.ee_twist.vy + s.ee_twist.wyaw * rx, s.ee_twist.vz};

  forge::Vec3 total{};
  const auto plate = [&](const Probe& q) { return overlaps_plate(q, g); };
  if (plate(p)) {
    const double up = separation(p, 0.0, 0.0, 1.0, 1.0, plate);
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    const double ix = -p.x / r, iy = -p.y / r;
    const double in = separation(p, ix, iy, 0.0, r, plate);  // at the axis the peg clears the bore
    const forge::Vec3 f = up <= in ? penalty({0.0, 0.0, 1.0}, up, v, g, mu) : penalty({ix, iy, 0.0}, in, v, g, mu);
    total = total + f;
  }
  const auto floor = [&](const Probe& q) { return overlaps_floor(q, g); };
  if (floor(p)) total = total + penalty({0.0, 0.0, 1.0}, separation(p, 0.0, 0.0, 1.0, 1.0, floor), v, g, mu);
  return total;
}

forge::world::SimState random_contact_state(forge::RandomStream& rng) {
  forge::world::SimState s;
  const double r = 0.007 * std::sqrt(rng.canonical());
  const double phi = rng.uniform(0.0, 6.283185307179586);
  s.grasp_offset = {rng.uniform(-0.003, 0.003), rng.uniform(-0.003, 0.003), -0.03, rng.uniform(-0.3, 0.3)};
  s.ee_pose = {0.0, 0.0, 0.0, rng.uniform(-3.0, 3.0)};
  s.sync_held_pose();
  // shift the EE so the peg bottom lands on the drawn point
  const double tx = r * std::cos(phi), ty = r * std::sin(phi), tz = rng.uniform(-0.027, 0.002);
  s.ee_pose.x += tx - s.held_pose.x;
  s.ee_pose.y += ty - s.held_pose.y;
  s.ee_pose.z += tz - s.held_pose.z;
  s.ee_twist = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.5, 0.5)};
  s.sync_held_pose();
  return s;
}

std::vector<double> gae(const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& d,
                        double bootstrap, double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : bootstrap;
    delta[t] = r[t] + (d[t] ? 0.0 : gamma * next) - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t l = t; l < n; ++l) {
      adv[t] += w * delta[l];
      if (d[l]) break;
      w *= gamma * lambda;
    }
  }
  return adv;
}

Recount recount(const std::vector<forge::eval::EpisodeResult>& results, double rate_hz) {
  long long n = 0, successes = 0, predicted = 0, predicted_hits = 0, steps = 0;
  for (const auto& r : results) {
    ++n;
    if (r.success) ++successes;
    if (r.terminated_by == forge::eval::TerminatedBy::kPredicted) {
      ++predicted;
      if (r.success) ++predicted_hits;
    }
    steps += r.termination_step;
  }
  Recount out;
  const double p = double(successes) / double(n);
  out.success_rate = p;
  // Bernoulli sample variance: n p (1 - p) / (n - 1)
  out.success_se = n > 1 ? std::sqrt(p * (1 - p) * double(n) / double(n - 1) / double(n)) : 0.0;
  out.duration_s = double(steps) / double(n) / rate_hz;  // mean termination step, in seconds
  if (predicted > 0) out.precision = double(predicted_hits) / double(predicted);
  if (successes > 0) out.recall = double(predicted_hits) / double(successes);
  return out;
}

double step_overshoot(double kp, double step, double seconds) {
  forge::world::TaskGeometry geom;
  geom.socket_top_pose = {0.0, 0.0, -1.0, 0.0};  // far below: free space
  forge::world::PhysicsParams params;
  const auto gains = forge::control::ControllerGains::from_stiffness(kp, 0.02);
  forge::world::SimState s;
  s.sync_held_pose();
  const forge::PoseYaw target{step, 0.0, 0.0, 0.0};
  const double dt = 1.0 / 120.0;
  double worst = 0.0;
  for (int i = 0; i < static_cast<int>(seconds / dt); ++i) {
    const auto w = forge::control::impedance_wrench(target, s.ee_pose, s.ee_twist, gains);
    s = forge::world::step_physics(s, w, geom, params, 0.0, dt);
    worst = std::max(worst, (s.ee_pose.x - step) / step);
  }
  return worst;
}

}  // namespace oracle
