#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "forge/eval/trajectory.hpp"

using namespace forge;
using namespace forge::eval;
namespace fs = std::filesystem;

namespace {

rl::ActorCritic model() {
  rl::PolicyConfig pc;
  pc.hidden = {16, 16};
  pc.gru_size = 8;
  return rl::ActorCritic(pc, 4);
}

}  // namespace

TEST_CASE("trajectory: write, read and replay bit-exactly") {
  const fs::path dir = fs::temp_directory_path() / "forge_tests";
  fs::create_directories(dir);
  const fs::path p = dir / "episode.traj";
  const rl::ActorCritic m = model();
  env::EpisodeOptions opts;
  opts.pose_error_mode = env::PoseErrorMode::kRing;
  opts.ring_min = 0.001;
  opts.ring_max = 0.0025;
  opts.force_threshold_override = 7.5;
  Trajectory t = record_trajectory(m, env::EnvConfig{}, 3, 11, opts, 0.9);
  REQUIRE_FALSE(t.steps.empty());
  write_trajectory(p, t);
  const Trajectory back = read_trajectory(p);
  CHECK(back.steps == t.steps);
  CHECK(back.seed == 3);
  CHECK(back.episode == 11);
  CHECK(*back.p_term == 0.9);
  CHECK(back.options.ring_max == 0.0025);
  CHECK(replay(back, m, env::EnvConfig{}).match);
}

TEST_CASE("trajectory: tampering is detected") {
  const rl::ActorCritic m = model();
  Trajectory t = record_trajectory(m, env::EnvConfig{}, 3, 12, {}, std::nullopt);
  REQUIRE(t.steps.size() == 150);
  t.steps[40].reward = std::nextafter(t.steps[40].reward, 1e9);
  const ReplayReport r = replay(t, m, env::EnvConfig{});
  CHECK_FALSE(r.match);
  CHECK(r.first_mismatch_step == 41);
}

TEST_CASE("trajectory: malformed files are rejected") {
  const fs::path p = fs::temp_directory_path() / "forge_tests" / "broken.traj";
  {
    std::ofstream out(p);
    out << "{\"version\": 1}\nnot numbers\n";
  }
  CHECK_THROWS_AS(read_trajectory(p), TrajectoryError);
}
