#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/env/env.hpp"
#include "forge/rl/actor_critic.hpp"

namespace forge::eval {

inline constexpr double kDefaultPTerm = 0.9;
inline constexpr double kDeploymentForceThreshold = 7.5;  // N

/// Everything observed in one evaluation episode, step by step. Steps are
/// numbered from 1; entry i of each trace belongs to step i + 1.
struct EpisodeTrace {
  std::uint64_t episode = 0;
  int horizon = 0;
  double pose_error_norm = 0.0;  // m
  double kp = 0.0;
  double force_threshold = 0.0;
  bool diverged = false;
  std::vector<double> a_et;
  std::vector<std::uint8_t> success;
  std::vector<double> force_mean;  // mean sub-step force norm per step
  std::vector<double> force_max;   // max sub-step force norm per step

  int executed_steps() const { return static_cast<int>(a_et.size()); }
};

enum class TerminatedBy { kPredicted, kFixedHorizon };

struct EpisodeResult {
  std::uint64_t episode = 0;
  bool success = false;
  std::optional<int> first_success_step;  // within the executed steps
  int termination_step = 0;
  TerminatedBy terminated_by = TerminatedBy::kFixedHorizon;
  double f_mean = 0.0;  // N, over executed steps
  double f_max = 0.0;   // N
  double pose_error_norm = 0.0;
  double gains_used = 0.0;
  double force_threshold = 0.0;
  bool diverged = false;
  std::vector<double> a_et;
};

/// Plays one episode with the deterministic policy. With `stop_p_term` set,
/// the episode ends after the first step whose a_ET exceeds it; otherwise it
/// runs to the horizon. A physics divergence ends the episode and is flagged.
EpisodeTrace record_episode(env::PegInsertionEnv& env, rl::DeterministicPolicy& policy, std::uint64_t master_seed,
                            std::uint64_t episode, const env::EpisodeOptions& options,
                            std::optional<double> stop_p_term);

/// Outcome if the episode is ended at the first step with a_ET > p_term.
EpisodeResult resolve_predicted(const EpisodeTrace& trace, double p_term);
/// Outcome if the episode is ended after exactly `steps` steps.
EpisodeResult resolve_fixed(const EpisodeTrace& trace, int steps);

/// run_episode: record with early stopping and resolve.
EpisodeResult run_episode(env::PegInsertionEnv& env, rl::DeterministicPolicy& policy, double p_term,
                          std::uint64_t master_seed, std::uint64_t episode, const env::EpisodeOptions& options = {});

struct MetricsSummary {
  int episodes = 0;
  double success_rate = 0.0;
  double success_se = 0.0;  // sample std / sqrt(n)
  double duration_s = 0.0;
  double f_mean = 0.0;
  double f_max = 0.0;
  std::optional<double> precision;  // absent when nothing was predict-terminated
  std::optional<double> recall;     // absent when nothing succeeded
  int divergences = 0;
};

/// `policy_rate_hz` converts step counts to seconds.
MetricsSummary compute_metrics(const std::vector<EpisodeResult>& results, double policy_rate_hz);

struct TradeoffPoint {
  std::string method;  // "pred" or "fixed"
  double param = 0.0;  // p_term or T (steps)
  double success_rate = 0.0;
  std::optional<double> delay_s;  // absent when no episode succeeded
};

struct TradeoffCurves {
  std::vector<TradeoffPoint> pred;   // sorted by success rate
  std::vector<TradeoffPoint> fixed;  // sorted by success rate
};

/// p_term grid {0.05, 0.10, ..., 0.95}.
std::vector<double> default_p_term_grid();

/// Re-terminates full-horizon traces under every p_term in `p_grid` and
/// every fixed length 1..horizon. Delay averages over episodes that are
/// successful at termination.
TradeoffCurves termination_tradeoff(const std::vector<EpisodeTrace>& traces, const std::vector<double>& p_grid,
                                    double policy_rate_hz);

/// Smallest delay among curve points with success rate >= `level`.
std::optional<double> delay_at_success(const std::vector<TradeoffPoint>& curve, double level);

struct NoiseBand {
  std::string name;
  double lo = 0.0;  // m, inclusive
  double hi = 0.0;  // m, exclusive except for the last band
  bool closed_hi = false;
};

/// Low [0, 1), Medium [1, 2.5), High [2.5, 5] mm.
std::vector<NoiseBand> standard_bands();
/// Index into standard_bands(), or -1 when outside every band.
int band_index(double error_norm);

struct BandRate {
  NoiseBand band;
  int episodes = 0;
  int successes = 0;
  std::optional<double> success_rate;  // absent for an empty band
};

std::vector<BandRate> noise_breakdown(const std::vector<EpisodeResult>& results);

/// Evaluation workload: episode i uses conditions[i % conditions.size()].
struct EvalRequest {
  std::uint64_t seed = 1;
  int episodes = 45;
  std::uint64_t first_episode = 0;
  std::vector<env::EpisodeOptions> conditions{env::EpisodeOptions{}};
  std::optional<double> stop_p_term = kDefaultPTerm;  // unset: full horizon
  int threads = 1;
};

/// Master seed for evaluation episodes, disjoint from the training streams.
std::uint64_t evaluation_seed(std::uint64_t run_seed, std::uint64_t purpose = 0);

/// Episodes are independent and run in parallel; the result order and
/// contents do not depend on the thread count.
std::vector<EpisodeTrace> run_traces(const rl::ActorCritic& model, const env::EnvConfig& env_cfg,
                                     const EvalRequest& request);

/// Ring conditions for a band name: low, medium, high, all, lowmed.
std::vector<env::EpisodeOptions> band_conditions(const std::string& band, std::optional<double> kp,
                                                 std::optional<double> force_threshold);

struct GainResult {
  double kp = 0.0;
  MetricsSummary summary;
  std::vector<double> f_means;  // per-episode F_mean
};

std::vector<double> default_gains();

std::vector<GainResult> gain_sweep(const rl::ActorCritic& model, const env::EnvConfig& env_cfg,
                                   const std::vector<double>& gains, int episodes_per_gain, std::uint64_t seed,
                                   double p_term, const std::string& band, double force_threshold, int threads);

/// Picks the checkpoint with the best success rate on `episodes` held-out
/// episodes (ties: lower F_mean, then the later file).
struct SelectionResult {
  std::filesystem::path best;
  std::vector<double> success_rates;
};
SelectionResult select_checkpoint(const std::vector<std::filesystem::path>& paths, int episodes, int threads);

// CSV writers. Columns are documented in docs/formats.md.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<std::pair<std::string, MetricsSummary>>& rows);
void write_episodes_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, std::vector<EpisodeResult>>>& groups,
                        double policy_rate_hz);
void write_tradeoff_csv(const std::filesystem::path& path, const TradeoffCurves& curves);
void write_noise_rings_csv(const std::filesystem::path& path, const std::vector<BandRate>& bands);
void write_gain_sweep_csv(const std::filesystem::path& path, const std::vector<GainResult>& gains);

}  // namespace forge::eval
