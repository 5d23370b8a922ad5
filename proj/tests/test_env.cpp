#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "forge/env/env.hpp"

using namespace forge;
using namespace forge::env;

namespace {

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.noise = {0.0, 0.0, 0.0, 0.0};
  return cfg;
}

}  // namespace

TEST_CASE("env: episode runs exactly the configured length") {
  PegInsertionEnv env(EnvConfig{});
  env.reset(1, 0);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = env.step({}).done;
    ++steps;
  }
  CHECK(steps == 150);
  CHECK(env.sim_state().time == doctest::Approx(10.0));
  CHECK_THROWS(env.step({}));
}

TEST_CASE("env: reset is a pure function of (seed, episode)") {
  PegInsertionEnv a(EnvConfig{}), b(EnvConfig{});
  const Observation oa = a.reset(7, 3);
  b.reset(7, 99);
  const Observation ob = b.reset(7, 3);
  CHECK(oa == ob);
  Action act;
  act.pose = {0.1, -0.2, -0.5, 0.3};
  act.termination = 0.4;
  for (int i = 0; i < 20; ++i) {
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    REQUIRE(ra.observation == rb.observation);
    REQUIRE(ra.reward == rb.reward);
  }
  PegInsertionEnv c(EnvConfig{});
  CHECK_FALSE(c.reset(7, 4) == oa);
}

TEST_CASE("env: hand starts 3.7 to 5.7 cm above the fixed tip") {
  PegInsertionEnv env(EnvConfig{});
  for (std::uint64_t e = 0; e < 200; ++e) {
    env.reset(2, e);
    const double dz = env.sim_state().ee_pose.z - env.fixed_tip().z;
    CHECK(dz >= 0.037);
    CHECK(dz <= 0.057);
  }
}

TEST_CASE("env: without noise the observation is the true relative state") {
  PegInsertionEnv env(quiet_config());
  env.reset(3, 0);
  Action act;
  act.pose = {0.0, 0.0, -0.3, 0.0};
  for (int i = 0; i < 30; ++i) {
    const PoseYaw before = env.sim_state().ee_pose;
    const auto r = env.step(act);
    const PrivilegedState p = env.privileged();
    CHECK(r.observation.ee_pose_rel.x == doctest::Approx(p.ee_pose_rel.x).epsilon(1e-12));
    CHECK(r.observation.ee_pose_rel.z == doctest::Approx(p.ee_pose_rel.z).epsilon(1e-12));
    CHECK(r.observation.force == p.contact_force);
    CHECK(r.observation.ee_twist.vz ==
          doctest::Approx((env.sim_state().ee_pose.z - before.z) / env.config().policy_dt()).epsilon(1e-9));
    CHECK(r.observation.fixed_tip_rel == PoseYaw{});
    CHECK(r.observation.prev_action == act);
  }
}

TEST_CASE("env: observation vector round-trips bit-exactly") {
  PegInsertionEnv env(EnvConfig{});
  env.reset(4, 1);
  Action act;
  act.pose = {0.3, 0.1, -0.2, 0.5};
  act.termination = 0.25;
  const Observation o = env.step(act).observation;
  const auto v = o.to_vector();
  CHECK(v.size() == Observation::kSize);
  CHECK(Observation::from_vector(v) == o);
  CHECK(v[15] == 0.3);
  CHECK(v[19] == 0.25);
  CHECK(v[20] == env.dynamics().force_threshold);
  const auto pv = env.privileged().to_vector();
  CHECK(pv.size() == PrivilegedState::kSize);
  CHECK(pv[19] == env.dynamics().kp);
}

TEST_CASE("env: pushing down on the rim stays near kp * lambda") {
  EnvConfig cfg = quiet_config();
  cfg.dynamics.action_scale = {0.025, 0.025};
  cfg.dynamics.dead_zone = {0.0, 0.0};
  cfg.initial_state.hand_x = {0.006, 0.006};
  cfg.initial_state.hand_y = {0.0, 0.0};
  cfg.initial_state.hand_yaw = {0.0, 0.0};
  cfg.initial_state.held_x = {0.0, 0.0};
  EpisodeOptions opts;
  opts.kp_override = 800.0;
  PegInsertionEnv env(cfg);
  env.reset(5, 0, opts);
  Action act;
  act.pose = {0.006 / cfg.limits.position_bound, 0.0, -1.0, 0.0};
  double late_max = 0.0, peak = 0.0;
  for (int i = 0; i < 60; ++i) {
    const auto r = env.step(act);
    peak = std::max(peak, r.info.peak_force);
    if (i >= 30) late_max = std::max(late_max, r.info.peak_force);
  }
  // still resolved by the rim: penetration (20 N / 5000 N/m = 4 mm) below the 5.75 mm wall overlap
  CHECK(env.sim_state().held_pose.z - env.fixed_tip().z > -0.005);
  CHECK(late_max == doctest::Approx(20.0).epsilon(0.01));
  CHECK(peak <= 20.0 * 1.5);
}

TEST_CASE("env: config validation rejects nonsense") {
  EnvConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.decimation = 0;
  CHECK_THROWS(cfg.validate());
  EnvConfig bad;
  bad.physics_dt = 0.1;
  CHECK_THROWS(bad.validate());
}
