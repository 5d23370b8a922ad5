#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/env/env.hpp"
#include "forge/rl/actor_critic.hpp"

namespace forge::eval {

inline constexpr int kTrajectoryVersion = 1;

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectoryStep {
  std::array<double, env::Observation::kSize> observation{};  // input to the policy at this step
  std::array<double, 5> action{};
  PoseYaw ee_pose{};
  Twist ee_twist{};
  PoseYaw held_pose{};
  double reward = 0.0;
  double peak_force = 0.0;
  bool success = false;

  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
  std::string checkpoint;         // path as given when recording
  std::string checkpoint_digest;  // FNV-1a 64 of the checkpoint bytes, hex
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;
  env::EpisodeOptions options{};
  std::optional<double> p_term;
  std::vector<TrajectoryStep> steps;
};

std::string file_digest(const std::filesystem::path& path);

/// Plays one deterministic episode and records every step.
Trajectory record_trajectory(const rl::ActorCritic& model, const env::EnvConfig& env_cfg, std::uint64_t seed,
                             std::uint64_t episode, const env::EpisodeOptions& options, std::optional<double> p_term);

/// Values are written as hexadecimal floating point, so reading restores them bit for bit.
void write_trajectory(const std::filesystem::path& path, const Trajectory& t);
/// Throws TrajectoryError on malformed content.
Trajectory read_trajectory(const std::filesystem::path& path);

struct ReplayReport {
  bool match = false;
  int first_mismatch_step = -1;  // 1-based; -1 when the traces agree
  std::string detail;
};

/// Re-runs the recorded episode and compares every stored value bitwise.
ReplayReport replay(const Trajectory& recorded, const rl::ActorCritic& model, const env::EnvConfig& env_cfg);

}  // namespace forge::eval
