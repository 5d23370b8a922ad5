#include <doctest.h>

#include <cmath>

#include "forge/env/reward.hpp"
#include "forge/randomization/rng.hpp"
#include "oracles.hpp"

using namespace forge;
using namespace forge::env;

TEST_CASE("logistic kernel: anchors and oracle") {
  CHECK(logistic_kernel(0.0, 50, 2) == 0.25);
  CHECK(logistic_kernel(0.0, 100, 0) == 0.5);
  CHECK(logistic_kernel(0.01, 50, 2) == doctest::Approx(0.2350037122).epsilon(1e-9));
  RandomStream rng(12);
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(0.0, 0.2), a = rng.uniform(1.0, 200.0), b = rng.uniform(0.0, 4.0);
    CHECK(std::abs(logistic_kernel(d, a, b) - oracle::logistic_kernel(d, a, b)) <= 1e-9);
  }
}

TEST_CASE("logistic kernel: non-increasing in distance") {
  RandomStream rng(13);
  for (int i = 0; i < 1000; ++i) {
    double d1 = rng.uniform(0.0, 0.1), d2 = rng.uniform(0.0, 0.1);
    if (d1 > d2) std::swap(d1, d2);
    CHECK(logistic_kernel(d1, 50, 2) >= logistic_kernel(d2, 50, 2));
    CHECK(logistic_kernel(d1, 100, 0) >= logistic_kernel(d2, 100, 0));
  }
}

TEST_CASE("keypoint distance") {
  const RewardConfig cfg;
  const PoseYaw target{0.6, 0.0, 0.0, 0.0};
  CHECK(keypoint_distance(target, target, cfg.keypoint_heights) == 0.0);
  CHECK(keypoint_distance({0.601, 0.0, 0.0, 0.0}, target, cfg.keypoint_heights) == doctest::Approx(0.001));
  CHECK(keypoint_distance({0.6, 0.0, 0.0, 0.1}, target, cfg.keypoint_heights) == doctest::Approx(0.0));
}

TEST_CASE("insertion target sits at the bore floor") {
  const PoseYaw t = insertion_target({0.6, 0.01, 0.05, 0.0}, 0.025);
  CHECK(t.z == doctest::Approx(0.025));
  CHECK(t.x == 0.6);
}

TEST_CASE("place and success predicates") {
  const RewardConfig cfg;
  const PoseYaw tip{0.6, 0.0, 0.05, 0.0};
  auto at = [&](double lateral, double rel_z) { return PoseYaw{tip.x + lateral, tip.y, tip.z + rel_z, 0.0}; };
  auto deep = check_place_success(at(0.0, -0.0245), tip, cfg);
  CHECK(deep.success);
  auto hover = check_place_success(at(0.001, 0.002), tip, cfg);
  CHECK(hover.place);
  CHECK_FALSE(hover.success);
  auto far = check_place_success(at(0.0, 0.1), tip, cfg);
  CHECK_FALSE(far.place);
  CHECK_FALSE(far.success);
  CHECK_FALSE(check_place_success(at(0.0025, -0.0245), tip, cfg).success);
  CHECK_FALSE(check_place_success(at(0.0, -0.0235), tip, cfg).success);
  // each predicate against its geometric definition
  RandomStream rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double lat = rng.uniform(0.0, 0.004), z = rng.uniform(-0.03, 0.01);
    const auto r = check_place_success(at(lat, z), tip, cfg);
    CHECK(r.place == (lat < cfg.lateral_tolerance && z < cfg.place_dist));
    CHECK(r.success == (lat < cfg.lateral_tolerance && z <= -cfg.success_dist));
  }
}

TEST_CASE("contact penalty and termination reward") {
  CHECK(contact_penalty(10.0, 7.5, 0.2) == doctest::Approx(-0.5));
  CHECK(termination_reward(0.9, false) == doctest::Approx(-0.9));
  CHECK(termination_reward(1.0, true) == 0.0);
  RandomStream rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double f = rng.uniform(0, 30), th = rng.uniform(5, 10), beta = rng.uniform(0, 1);
    CHECK(std::abs(contact_penalty(f, th, beta) - oracle::contact_penalty(f, th, beta)) <= 1e-9);
    if (f <= th) CHECK(contact_penalty(f, th, beta) == 0.0);
    const double a = rng.canonical();
    const bool y = rng.canonical() < 0.5;
    CHECK(std::abs(termination_reward(a, y) - oracle::termination_reward(a, y)) <= 1e-9);
  }
}

TEST_CASE("total reward at the success pose") {
  const RewardConfig cfg;
  const PoseYaw tip{0.6, 0.0, 0.05, 0.0};
  const PoseYaw held = insertion_target(tip, 0.025);
  const RewardBreakdown r = compute_reward(held, tip, 0.025, cfg, 0.0, 7.5, 1.0);
  CHECK(r.total == doctest::Approx(2.75));
  CHECK(r.keypoint_coarse == 0.25);
  CHECK(r.keypoint_fine == 0.5);
  CHECK(r.place == 1.0);
  CHECK(r.success == 1.0);
  const RewardBreakdown p = compute_reward(held, tip, 0.025, cfg, 10.0, 7.5, 0.0);
  CHECK(p.contact_penalty == doctest::Approx(-0.5));
  CHECK(p.termination == doctest::Approx(-1.0));
  CHECK(p.total == doctest::Approx(2.75 - 0.5 - 1.0));
}

TEST_CASE("reward config validation") {
  RewardConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.coarse.a = 0.0;
  CHECK_THROWS(cfg.validate());
}
