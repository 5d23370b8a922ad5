#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "forge/config/run_config.hpp"
#include "forge/rl/actor_critic.hpp"
#include "forge/rl/ppo.hpp"

namespace forge::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainProgress {
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes_per_env = 0;  // episodes started by each env slot
};

struct Checkpoint {
  config::RunConfig config;
  ActorCritic model;
  std::optional<Optimizers> optimizers;
  TrainProgress progress;
};

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError on a bad magic, version mismatch or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace forge::rl
