#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "forge/env/env.hpp"
#include "forge/rl/actor_critic.hpp"
#include "forge/rl/ppo.hpp"

namespace forge::config {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; `what()` names the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainSchedule {
  std::int64_t total_steps = 20'000'000;  // environment steps, summed over envs
  int checkpoint_interval = 100;          // updates between checkpoints
  int log_interval = 5;                   // updates between metric rows
  int selection_checkpoints = 3;          // last checkpoints compared after training
  int selection_episodes = 50;
  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string preset = "peg_8mm";
  std::uint64_t seed = 1;
  int threads = 0;  // 0: machine parallelism
  env::EnvConfig env{};
  rl::PolicyConfig policy{};
  rl::PpoConfig ppo{};
  TrainSchedule train{};

  /// Throws ConfigError.
  void validate() const;
  int resolved_threads() const;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
RunConfig make_preset(std::string_view name);

/// Parses JSON (comments allowed). Fields absent from the text keep the
/// values of the preset named by "preset" (default peg_8mm). Unknown keys,
/// wrong types and failed validation raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config as pretty-printed JSON; parse_config round-trips it.
std::string to_json_text(const RunConfig& cfg);

}  // namespace forge::config
