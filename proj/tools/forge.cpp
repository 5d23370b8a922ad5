// forge: train, evaluate and inspect peg-insertion policies.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
// Relative output directories resolve against $FORGE_OUTPUT_ROOT when set.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "forge/config/run_config.hpp"
#include "forge/eval/evaluation.hpp"
#include "forge/eval/trajectory.hpp"
#include "forge/rl/checkpoint.hpp"
#include "forge/rl/trainer.hpp"
#include "forge/simd/cpu.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

// Thrown for bad flags or inputs that should exit with kUsageError.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_path(const std::string& dir) {
  fs::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("FORGE_OUTPUT_ROOT"); root != nullptr && *root != '\0') return fs::path(root) / p;
  return p;
}

// Creates `dir`; a non-empty existing directory needs `force`.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw UsageError(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw UsageError(dir.string() + " already exists; pass --force to overwrite");
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

rl::Checkpoint open_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  return rl::load_checkpoint(path);
}

int thread_budget(int flag, const config::RunConfig& cfg) { return flag > 0 ? flag : cfg.resolved_threads(); }

struct EvalFlags {
  std::string checkpoint;
  int episodes = 45;
  std::string band = "all";
  double p_term = eval::kDefaultPTerm;
  std::optional<double> gains;
  double force_threshold = eval::kDeploymentForceThreshold;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out = "eval";
  bool force = false;
};

void add_eval_flags(CLI::App* app, EvalFlags& f, bool gains_flag) {
  app->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  app->add_option("--episodes", f.episodes, "Episodes per condition")->check(CLI::PositiveNumber);
  app->add_option("--noise-band", f.band, "Pose-estimation error band")
      ->check(CLI::IsMember({"low", "medium", "high", "all", "lowmed"}));
  app->add_option("--p-term", f.p_term, "Early-termination threshold on a_ET")->check(CLI::Range(0.0, 1.0));
  if (gains_flag) app->add_option("--gains", f.gains, "Fixed controller stiffness kp (N/m)")->check(CLI::PositiveNumber);
  app->add_option("--force-threshold", f.force_threshold, "Force threshold given to the policy (N)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--seed", f.seed, "Evaluation seed (default: the run seed)");
  app->add_option("--threads", f.threads, "Worker threads (0: machine parallelism)")->check(CLI::NonNegativeNumber);
  app->add_option("--out", f.out, "Output directory");
  app->add_flag("--force", f.force, "Overwrite a non-empty output directory");
}

int cmd_train(const std::string& config_path, const std::string& preset, std::optional<std::uint64_t> seed,
              std::optional<std::int64_t> steps, int threads, std::string out, bool force, const std::string& resume) {
  std::optional<rl::Checkpoint> from;
  config::RunConfig cfg;
  if (!resume.empty()) {
    from = open_checkpoint(resume);
    cfg = from->config;
  } else if (!config_path.empty()) {
    if (!fs::exists(config_path)) throw config::ConfigError("config file not found: " + config_path);
    cfg = config::load_config(config_path);
  } else {
    cfg = config::make_preset(preset);
  }
  if (seed) cfg.seed = *seed;
  if (steps) cfg.train.total_steps = *steps;
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  if (out.empty()) out = "runs/" + cfg.preset + "-s" + std::to_string(cfg.seed);
  const fs::path dir = output_path(out);
  if (from) {
    fs::create_directories(dir);
    from->config = cfg;
  } else {
    prepare_dir(dir, force);
  }
  write_text(dir / "config.json", config::to_json_text(cfg));

  std::unique_ptr<rl::Trainer> trainer =
      from ? std::make_unique<rl::Trainer>(std::move(*from)) : std::make_unique<rl::Trainer>(cfg);
  std::fprintf(stderr, "forge train: %s seed %llu, %lld steps (%lld updates), actor %zu / critic %zu parameters, %s kernels\n",
               cfg.preset.c_str(), static_cast<unsigned long long>(cfg.seed),
               static_cast<long long>(cfg.train.total_steps), static_cast<long long>(trainer->total_updates()),
               trainer->model().actor.params().size(), trainer->model().critic.params().size(),
               std::string(simd::isa_name(simd::active_isa())).c_str());
  const auto written = trainer->run(dir, [](const rl::MetricRow& r) {
    std::fprintf(stderr, "step %10lld  return %8.2f  success %.3f  f_mean %6.2f  term_acc %.3f  kl %.4f  clip %.3f\n",
                 static_cast<long long>(r.step), r.episode_return, r.success_rate, r.f_mean, r.term_accuracy, r.kl,
                 r.clip_frac);
  });

  // checkpoint selection over the most recent checkpoints of this run
  std::vector<fs::path> recent;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 && entry.path().extension() == ".bin") recent.push_back(entry.path());
  }
  std::sort(recent.begin(), recent.end());
  if (recent.size() > static_cast<std::size_t>(cfg.train.selection_checkpoints))
    recent.erase(recent.begin(), recent.end() - cfg.train.selection_checkpoints);
  if (!written.empty() && !recent.empty()) {
    const auto sel = eval::select_checkpoint(recent, cfg.train.selection_episodes, cfg.resolved_threads());
    std::ofstream csv(dir / "selection.csv", std::ios::trunc);
    csv << "checkpoint,success_rate\n";
    for (std::size_t i = 0; i < recent.size(); ++i) csv << recent[i].filename().string() << ',' << sel.success_rates[i] << '\n';
    fs::copy_file(sel.best, dir / "best.bin", fs::copy_options::overwrite_existing);
    std::fprintf(stderr, "forge train: selected %s\n", sel.best.filename().string().c_str());
  }
  std::printf("%s\n", (dir / "best.bin").string().c_str());
  return 0;
}

int cmd_eval(const EvalFlags& f) {
  const rl::Checkpoint ckpt = open_checkpoint(f.checkpoint);
  const fs::path dir = output_path(f.out);
  prepare_dir(dir, f.force);
  const double rate = 1.0 / ckpt.config.env.policy_dt();
  const std::uint64_t seed = f.seed.value_or(ckpt.config.seed);
  eval::EvalRequest req;
  req.seed = eval::evaluation_seed(seed);
  req.episodes = f.episodes;
  req.conditions = eval::band_conditions(f.band, f.gains, f.force_threshold);
  req.stop_p_term = f.p_term;
  req.threads = thread_budget(f.threads, ckpt.config);
  const auto traces = eval::run_traces(ckpt.model, ckpt.config.env, req);
  std::vector<eval::EpisodeResult> results;
  for (const auto& t : traces) results.push_back(eval::resolve_predicted(t, f.p_term));

  std::vector<std::pair<std::string, eval::MetricsSummary>> rows;
  const auto bands = eval::standard_bands();
  for (std::size_t b = 0; b < bands.size(); ++b) {
    std::vector<eval::EpisodeResult> in_band;
    for (const auto& r : results) {
      if (eval::band_index(r.pose_error_norm) == static_cast<int>(b)) in_band.push_back(r);
    }
    if (!in_band.empty()) rows.emplace_back(bands[b].name, eval::compute_metrics(in_band, rate));
  }
  const auto total = eval::compute_metrics(results, rate);
  rows.emplace_back(f.band == "all" ? "all" : f.band + "_total", total);
  eval::write_metrics_csv(dir / "metrics.csv", rows);
  eval::write_episodes_csv(dir / "episodes.csv", {{f.band, results}}, rate);
  eval::write_noise_rings_csv(dir / "noise_rings.csv", eval::noise_breakdown(results));
  std::printf("success %.3f (se %.3f)  duration %.2f s  f_mean %.2f N  f_max %.2f N  precision %s  recall %s\n",
              total.success_rate, total.success_se, total.duration_s, total.f_mean, total.f_max,
              total.precision ? std::to_string(*total.precision).c_str() : "-",
              total.recall ? std::to_string(*total.recall).c_str() : "-");
  return 0;
}

int cmd_sweep(const EvalFlags& f, std::vector<double> gains) {
  const rl::Checkpoint ckpt = open_checkpoint(f.checkpoint);
  const fs::path dir = output_path(f.out);
  prepare_dir(dir, f.force);
  if (gains.empty()) gains = eval::default_gains();
  const std::uint64_t seed = eval::evaluation_seed(f.seed.value_or(ckpt.config.seed));
  const auto res = eval::gain_sweep(ckpt.model, ckpt.config.env, gains, f.episodes, seed, f.p_term, f.band,
                                    f.force_threshold, thread_budget(f.threads, ckpt.config));
  eval::write_gain_sweep_csv(dir / "gain_sweep.csv", res);
  std::vector<std::pair<std::string, eval::MetricsSummary>> rows;
  for (const auto& g : res) {
    rows.emplace_back("kp_" + std::to_string(static_cast<long long>(g.kp)), g.summary);
    std::printf("kp %6.0f  success %.3f  f_mean %.2f N\n", g.kp, g.summary.success_rate, g.summary.f_mean);
  }
  eval::write_metrics_csv(dir / "metrics.csv", rows);
  return 0;
}

int cmd_curve(const EvalFlags& f) {
  const rl::Checkpoint ckpt = open_checkpoint(f.checkpoint);
  const fs::path dir = output_path(f.out);
  prepare_dir(dir, f.force);
  const double rate = 1.0 / ckpt.config.env.policy_dt();
  eval::EvalRequest req;
  req.seed = eval::evaluation_seed(f.seed.value_or(ckpt.config.seed));
  req.episodes = f.episodes;
  req.conditions = eval::band_conditions(f.band, f.gains, f.force_threshold);
  req.stop_p_term.reset();
  req.threads = thread_budget(f.threads, ckpt.config);
  const auto traces = eval::run_traces(ckpt.model, ckpt.config.env, req);
  const auto curves = eval::termination_tradeoff(traces, eval::default_p_term_grid(), rate);
  eval::write_tradeoff_csv(dir / "tradeoff.csv", curves);
  const auto show = [](const std::optional<double>& d) { return d ? std::to_string(*d) + " s" : std::string("n/a"); };
  std::printf("delay at 0.8 success: pred %s, fixed %s\n", show(eval::delay_at_success(curves.pred, 0.8)).c_str(),
              show(eval::delay_at_success(curves.fixed, 0.8)).c_str());
  return 0;
}

int cmd_replay(const std::string& trajectory, const std::string& record, const std::string& checkpoint,
               std::uint64_t episode, const std::string& band, std::optional<double> p_term) {
  if (!record.empty()) {
    if (checkpoint.empty()) throw UsageError("--record needs --checkpoint");
    const rl::Checkpoint ckpt = open_checkpoint(checkpoint);
    const auto conds = eval::band_conditions(band, std::nullopt, eval::kDeploymentForceThreshold);
    eval::Trajectory t = eval::record_trajectory(ckpt.model, ckpt.config.env, eval::evaluation_seed(ckpt.config.seed),
                                                 episode, conds[episode % conds.size()], p_term);
    t.checkpoint = fs::absolute(checkpoint).string();
    t.checkpoint_digest = eval::file_digest(checkpoint);
    const fs::path out = output_path(record);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    eval::write_trajectory(out, t);
    std::printf("recorded %zu steps to %s\n", t.steps.size(), out.string().c_str());
    return 0;
  }
  if (trajectory.empty()) throw UsageError("replay needs a trajectory file or --record");
  if (!fs::exists(trajectory)) throw UsageError("trajectory not found: " + trajectory);
  const eval::Trajectory t = eval::read_trajectory(trajectory);
  const std::string ckpt_path = checkpoint.empty() ? t.checkpoint : checkpoint;
  if (eval::file_digest(ckpt_path) != t.checkpoint_digest)
    throw std::runtime_error("checkpoint " + ckpt_path + " differs from the one used for recording");
  const rl::Checkpoint ckpt = open_checkpoint(ckpt_path);
  const auto rep = eval::replay(t, ckpt.model, ckpt.config.env);
  if (!rep.match) {
    std::fprintf(stderr, "forge replay: mismatch at %s\n", rep.detail.c_str());
    return kRuntimeFailure;
  }
  std::printf("replay matches: %zu steps bit-identical\n", t.steps.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Force-guided peg-insertion policies: training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, preset = "peg_8mm", out, resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  int threads = 0;
  bool force = false;
  auto* train = app.add_subcommand("train", "Train a policy with recurrent PPO");
  train->add_option("--config", config_path, "Run config (JSON, comments allowed)");
  train->add_option("--preset", preset, "Preset used when no config is given")
      ->check(CLI::IsMember(config::preset_names()));
  train->add_option("--seed", seed, "Run seed");
  train->add_option("--steps", steps, "Override the environment-step budget")->check(CLI::PositiveNumber);
  train->add_option("--threads", threads, "Worker threads (0: config value)")->check(CLI::NonNegativeNumber);
  train->add_option("--out", out, "Run directory (default runs/<preset>-s<seed>)");
  train->add_option("--resume", resume, "Continue from a checkpoint");
  train->add_flag("--force", force, "Overwrite a non-empty run directory");

  EvalFlags ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint over noise bands");
  add_eval_flags(eval_cmd, ev, true);

  EvalFlags sw;
  sw.out = "sweep";
  std::vector<double> gains;
  auto* sweep = app.add_subcommand("sweep", "Success and force across fixed controller gains");
  add_eval_flags(sweep, sw, false);
  sweep->add_option("--gains", gains, "Gains to sweep (default 400 500 600 700 800)")->check(CLI::PositiveNumber);

  EvalFlags cv;
  cv.out = "curve";
  cv.episodes = 200;
  auto* curve = app.add_subcommand("curve", "Termination trade-off: predicted vs fixed-length termination");
  add_eval_flags(curve, cv, true);

  std::string trajectory, record, replay_ckpt, replay_band = "all";
  std::uint64_t episode = 0;
  std::optional<double> replay_p_term;
  auto* replay = app.add_subcommand("replay", "Record an episode or verify a recorded one bit for bit");
  replay->add_option("trajectory", trajectory, "Trajectory file to verify");
  replay->add_option("--record", record, "Record a trajectory to this file instead");
  replay->add_option("--checkpoint", replay_ckpt, "Checkpoint (recording; overrides the recorded path when verifying)");
  replay->add_option("--episode", episode, "Evaluation episode index to record");
  replay->add_option("--noise-band", replay_band, "Error band used when recording")
      ->check(CLI::IsMember({"low", "medium", "high", "all", "lowmed"}));
  replay->add_option("--p-term", replay_p_term, "Stop the recorded episode at this threshold")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train) return cmd_train(config_path, preset, seed, steps, threads, out, force, resume);
    if (*eval_cmd) return cmd_eval(ev);
    if (*sweep) return cmd_sweep(sw, gains);
    if (*curve) return cmd_curve(cv);
    if (*replay) return cmd_replay(trajectory, record, replay_ckpt, episode, replay_band, replay_p_term);
  } catch (const config::ConfigError& e) {
    std::fprintf(stderr, "forge: config error: %s\n", e.what());
    return kUsageError;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "forge: %s\n", e.what());
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "forge: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "forge: %s\n", e.what());
    return kRuntimeFailure;
  }
  return kUsageError;
}
