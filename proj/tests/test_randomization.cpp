#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/randomization/randomization.hpp"

using namespace forge;
using namespace forge::randomization;

TEST_CASE("sample_dynamics: stays inside the ranges") {
  RandomStream rng(1);
  DynamicsRanges r;
  double kp_sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const DynamicsParams p = sample_dynamics(rng, r);
    REQUIRE(r.contains(p));
    const double cap = p.kp * p.action_scale;
    REQUIRE(cap >= 6.4 - 1e-12);
    REQUIRE(cap <= 20.0 + 1e-12);
    kp_sum += p.kp;
  }
  // uniform on [400, 800]: sd 400 / sqrt(12)
  const double se = 400.0 / std::sqrt(12.0) / std::sqrt(double(n));
  CHECK(std::abs(kp_sum / n - 600.0) < 3.0 * se);
}

TEST_CASE("sample_dynamics: degenerate ranges pin the value") {
  RandomStream rng(1);
  DynamicsRanges r;
  r.kp = {500, 500};
  r.action_scale = {0.02, 0.02};
  r.dead_zone = {0, 0};
  r.part_friction = {0.7, 0.7};
  r.force_threshold = {7.5, 7.5};
  const DynamicsParams p = sample_dynamics(rng, r);
  CHECK(p.kp == 500);
  CHECK(p.action_scale == 0.02);
  CHECK(p.dead_zone == Force3{});
  CHECK(p.part_friction == 0.7);
  CHECK(p.force_threshold == 7.5);
}

TEST_CASE("ranges: validation names the field") {
  DynamicsRanges r;
  r.kp = {800, 400};
  try {
    r.validate();
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("kp") != std::string::npos);
  }
}

TEST_CASE("sample_pose_error: ring norms and isotropy") {
  RandomStream rng(9);
  const int n = 20000;
  Vec3 mean{};
  double zz = 0.0, xx = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 e = sample_pose_error(rng, 0.001, 0.0025);
    REQUIRE(e.norm() >= 0.001 - 1e-15);
    REQUIRE(e.norm() <= 0.0025 + 1e-15);
    const Vec3 u = e * (1.0 / e.norm());
    mean += u;
    zz += u.z * u.z;
    xx += u.x * u.x;
  }
  mean *= 1.0 / n;
  // unit-vector components have variance 1/3; 4 standard errors
  const double tol = 4.0 * std::sqrt(1.0 / 3.0 / n);
  CHECK(std::abs(mean.x) < tol);
  CHECK(std::abs(mean.y) < tol);
  CHECK(std::abs(mean.z) < tol);
  CHECK(zz / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
  CHECK(xx / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
  CHECK_THROWS_AS(sample_pose_error(rng, 0.003, 0.001), std::invalid_argument);
}

TEST_CASE("sample_initial_state: fixed x uniform over its range") {
  RandomStream rng(4);
  InitialStateRanges r;
  std::vector<int> bins(10, 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const InitialState s = sample_initial_state(rng, r, 0.0, 0.05);
    REQUIRE(r.fixed_x.contains(s.fixed_tip.x));
    REQUIRE(r.hand_z.contains(s.ee.z - s.fixed_tip.z));
    const int b = std::min(9, static_cast<int>((s.fixed_tip.x - r.fixed_x.lo) / (r.fixed_x.hi - r.fixed_x.lo) * 10));
    ++bins[b];
  }
  // chi-square with 9 dof: 99.9th percentile is 27.9
  double chi2 = 0.0;
  for (int c : bins) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
  CHECK(chi2 < 27.9);
}

TEST_CASE("sample_initial_state: grasp offset puts the part top held_z above the gripper") {
  RandomStream rng(4);
  InitialStateRanges r;
  r.held_z = {0.016, 0.016};
  const InitialState s = sample_initial_state(rng, r, 0.0, 0.05);
  CHECK(s.grasp_offset.z == doctest::Approx(0.016 - 0.05));
}

TEST_CASE("noiser: velocity from differenced noisy poses") {
  // Static truth: velocity readings are (e2 - e1) / dt with per-axis sigma
  // sqrt(2) * 0.25 mm * 15 Hz = 5.3 mm/s.
  NoiseConfig cfg;
  ObservationNoiser noiser(cfg, 1.0 / 15.0);
  RandomStream rng(77);
  const PoseYaw truth{0.6, 0.0, 0.1, 0.0};
  const auto first = noiser.begin({}, truth, {}, {}, rng);
  CHECK(first.ee_twist == Twist{});
  double ss = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto r = noiser.observe(truth, {}, {}, rng);
    ss += r.ee_twist.vx * r.ee_twist.vx;
  }
  CHECK(std::sqrt(ss / n) == doctest::Approx(std::sqrt(2.0) * 0.00025 * 15.0).epsilon(0.03));
}

TEST_CASE("noiser: fixed-tip estimate is truth plus the frozen offset") {
  ObservationNoiser noiser(NoiseConfig{}, 1.0 / 15.0);
  RandomStream rng(1);
  const PoseYaw tip{0.6, 0.01, 0.05, 0.0};
  const Vec3 off{0.001, -0.002, 0.0005};
  const auto a = noiser.begin(off, {}, {}, tip, rng);
  const auto b = noiser.observe({}, {}, tip, rng);
  CHECK(a.fixed_tip_estimate.x == doctest::Approx(tip.x + off.x));
  CHECK(b.fixed_tip_estimate == a.fixed_tip_estimate);
}

TEST_CASE("streams: same (master, kind, index) reproduces, different index differs") {
  RandomStream a(42, StreamKind::kEpisode, 7), b(42, StreamKind::kEpisode, 7), c(42, StreamKind::kEpisode, 8),
      d(42, StreamKind::kObservation, 7);
  const auto pa = sample_dynamics(a, {});
  const auto pb = sample_dynamics(b, {});
  const auto pc = sample_dynamics(c, {});
  const auto pd = sample_dynamics(d, {});
  CHECK(pa.kp == pb.kp);
  CHECK(pa.part_friction == pb.part_friction);
  CHECK(pa.kp != pc.kp);
  CHECK(pa.kp != pd.kp);
}
