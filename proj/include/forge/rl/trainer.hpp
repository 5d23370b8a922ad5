#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "forge/config/run_config.hpp"
#include "forge/core/parallel.hpp"
#include "forge/env/env.hpp"
#include "forge/rl/checkpoint.hpp"
#include "forge/rl/ppo.hpp"

namespace forge::rl {

/// One row of the training metric log, aggregated over the episodes that
/// finished and the updates run since the previous row.
struct MetricRow {
  std::int64_t step = 0;
  double episode_return = 0.0;
  double success_rate = 0.0;
  double f_mean = 0.0;
  double term_accuracy = 0.0;
  double kl = 0.0;
  double clip_frac = 0.0;
  int episodes = 0;
  double entropy = 0.0;
  double value_loss = 0.0;
  double learning_rate = 0.0;
};

inline constexpr const char* kTrainLogName = "train_log.csv";

/// Recurrent PPO over `num_envs` peg-insertion environments. Environment i
/// plays episodes i, i + N, i + 2N, ... of the run seed, so a run is a pure
/// function of its config and seed.
class Trainer {
 public:
  explicit Trainer(const config::RunConfig& cfg);
  /// Continues from a checkpoint that carries optimizer state. Interrupted
  /// episodes restart under their own indices.
  explicit Trainer(Checkpoint resume);
  ~Trainer();

  /// Trains until the step budget is spent. Appends to `dir`/train_log.csv
  /// and writes ckpt_<update>.bin every checkpoint_interval updates and at
  /// the end. Returns the checkpoint paths written, oldest first.
  std::vector<std::filesystem::path> run(const std::filesystem::path& dir,
                                         const std::function<void(const MetricRow&)>& on_log = {});

  /// Runs a single collect-and-update cycle without writing files.
  UpdateStats iterate();

  Checkpoint checkpoint() const;
  const ActorCritic& model() const { return model_; }
  const TrainProgress& progress() const { return progress_; }
  std::int64_t total_updates() const;

 private:
  struct EpisodeAccum {
    double ret = 0.0;
    double force_sum = 0.0;
    int correct = 0;
    int steps = 0;
  };

  void start_episodes();
  void collect();
  double current_lr() const;

  config::RunConfig cfg_;
  ActorCritic model_;
  Optimizers opt_;
  TrainProgress progress_;
  std::unique_ptr<WorkerPool> pool_;
  std::vector<env::PegInsertionEnv> envs_;
  std::vector<env::Observation> current_obs_;
  std::vector<std::uint8_t> starting_;
  std::vector<float> h_actor_;
  std::vector<float> h_critic_;
  std::vector<EpisodeAccum> accum_;
  RolloutBuffer buf_;

  // finished-episode totals since the last metric row
  int done_episodes_ = 0;
  double sum_return_ = 0.0, sum_success_ = 0.0, sum_force_ = 0.0, sum_term_acc_ = 0.0;
  double sum_kl_ = 0.0, sum_clip_ = 0.0, sum_entropy_ = 0.0, sum_vloss_ = 0.0;
  int updates_since_log_ = 0;
};

}  // namespace forge::rl
