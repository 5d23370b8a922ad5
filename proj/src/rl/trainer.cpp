#include "forge/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "forge/world/world.hpp"

namespace forge::rl {

namespace {

constexpr int kObs = static_cast<int>(env::Observation::kSize);
constexpr int kPriv = static_cast<int>(env::PrivilegedState::kSize);
constexpr const char* kLogHeader = "step,return,success_rate,f_mean,term_accuracy,kl,clip_frac";

// NaN (no finished episodes) becomes an empty cell
std::string cell(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_row(const MetricRow& r) {
  std::string out = std::to_string(r.step);
  for (double v : {r.episode_return, r.success_rate, r.f_mean, r.term_accuracy, r.kl, r.clip_frac}) out += ',' + cell(v);
  return out;
}

// Keeps the header and every row at or before `step`; creates the file if absent.
void prepare_log(const std::filesystem::path& path, std::int64_t step) {
  std::vector<std::string> keep;
  if (std::ifstream in(path); in) {
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        first = false;
        continue;
      }
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= step) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kLogHeader << '\n';
  for (const auto& l : keep) out << l << '\n';
}

double mean_force(const std::vector<double>& trace) {
  if (trace.empty()) return 0.0;
  double s = 0.0;
  for (double f : trace) s += f;
  return s / static_cast<double>(trace.size());
}

}  // namespace

Trainer::Trainer(const config::RunConfig& cfg) : cfg_(cfg), model_(cfg.policy, cfg.seed), opt_(model_) {
  cfg_.validate();
  start_episodes();
}

Trainer::Trainer(Checkpoint resume)
    : cfg_(std::move(resume.config)), model_(std::move(resume.model)), progress_(resume.progress) {
  if (!resume.optimizers) throw CheckpointError("checkpoint has no optimizer state; cannot resume training");
  opt_ = std::move(*resume.optimizers);
  cfg_.validate();
  start_episodes();
}

Trainer::~Trainer() = default;

std::int64_t Trainer::total_updates() const {
  const std::int64_t per = static_cast<std::int64_t>(cfg_.ppo.num_envs) * cfg_.ppo.horizon;
  // never exceeds the step budget
  return std::max<std::int64_t>(cfg_.train.total_steps / per, 1);
}

void Trainer::start_episodes() {
  const int n = cfg_.ppo.num_envs;
  const int g = cfg_.policy.gru_size;
  pool_ = std::make_unique<WorkerPool>(std::min(cfg_.resolved_threads(), n));
  envs_.clear();
  envs_.reserve(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) envs_.emplace_back(cfg_.env);
  current_obs_.assign(static_cast<std::size_t>(n), {});
  starting_.assign(static_cast<std::size_t>(n), 1);
  accum_.assign(static_cast<std::size_t>(n), {});
  h_actor_.assign(static_cast<std::size_t>(n) * g, 0.0f);
  h_critic_.assign(h_actor_.size(), 0.0f);
  const auto k = static_cast<std::uint64_t>(progress_.episodes_per_env);
  pool_->for_each(n, [&](int e) {
    current_obs_[e] = envs_[e].reset(cfg_.seed, static_cast<std::uint64_t>(e) + static_cast<std::uint64_t>(n) * k);
  });
  buf_.resize(n, cfg_.ppo.horizon, g);
}

double Trainer::current_lr() const {
  if (!cfg_.ppo.lr_decay) return cfg_.ppo.learning_rate;
  const double frac = 1.0 - static_cast<double>(progress_.updates) / static_cast<double>(total_updates());
  return cfg_.ppo.learning_rate * std::max(frac, 0.0);
}

void Trainer::collect() {
  const int n = cfg_.ppo.num_envs;
  const int T = cfg_.ppo.horizon;
  std::copy(h_actor_.begin(), h_actor_.end(), buf_.actor_h0.begin());
  std::copy(h_critic_.begin(), h_critic_.end(), buf_.critic_h0.begin());

  std::vector<RandomStream> policy_rng;
  policy_rng.reserve(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    policy_rng.emplace_back(cfg_.seed, StreamKind::kPolicy,
                            static_cast<std::uint64_t>(progress_.updates) * static_cast<std::uint64_t>(n) + e);
  }
  std::vector<float> ya(static_cast<std::size_t>(n) * kActorOutputs), yc(static_cast<std::size_t>(n));
  std::vector<env::Action> actions(static_cast<std::size_t>(n));
  std::vector<double> beta_mean(static_cast<std::size_t>(n));
  std::vector<env::StepResult> results(static_cast<std::size_t>(n));
  std::vector<env::Observation> next_obs(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> done(static_cast<std::size_t>(n));

  for (int t = 0; t < T; ++t) {
    const std::size_t row0 = static_cast<std::size_t>(t) * n;
    for (int e = 0; e < n; ++e) {
      const auto o = current_obs_[e].to_vector();
      const auto p = envs_[e].privileged().to_vector();
      float* ro = &buf_.raw_obs[(row0 + e) * kObs];
      float* rp = &buf_.raw_priv[(row0 + e) * kPriv];
      for (int k = 0; k < kObs; ++k) ro[k] = static_cast<float>(o[k]);
      for (int k = 0; k < kPriv; ++k) rp[k] = static_cast<float>(p[k]);
      buf_.episode_start[row0 + e] = starting_[e];
    }
    float* xo = &buf_.obs[row0 * kObs];
    float* xp = &buf_.priv[row0 * kPriv];
    model_.obs_norm.normalize(&buf_.raw_obs[row0 * kObs], xo, static_cast<std::size_t>(n));
    model_.priv_norm.normalize(&buf_.raw_priv[row0 * kPriv], xp, static_cast<std::size_t>(n));
    model_.actor.step(n, xo, h_actor_.data(), starting_.data(), ya.data());
    model_.critic.step(n, xp, h_critic_.data(), starting_.data(), yc.data());

    for (int e = 0; e < n; ++e) {
      const PolicyOutput out = decode_actor_output(&ya[static_cast<std::size_t>(e) * kActorOutputs], model_.log_std);
      RandomStream& rng = policy_rng[e];
      double u[kPoseDims];
      for (int k = 0; k < kPoseDims; ++k) {
        u[k] = rng.normal(out.mean[k], std::exp(out.log_std[k]));
        buf_.pre_squash[(row0 + e) * kPoseDims + k] = static_cast<float>(u[k]);
        u[k] = buf_.pre_squash[(row0 + e) * kPoseDims + k];
        actions[e].pose[k] = std::tanh(u[k]);
      }
      const double a_et = out.termination.sample(rng);
      actions[e].termination = a_et;
      beta_mean[e] = out.termination.mean();
      buf_.termination[row0 + e] = a_et;
      double row[kActorOutputs];
      for (int k = 0; k < kActorOutputs; ++k) row[k] = ya[static_cast<std::size_t>(e) * kActorOutputs + k];
      double ls[kPoseDims];
      for (int k = 0; k < kPoseDims; ++k) ls[k] = model_.log_std[k];
      buf_.log_prob[row0 + e] = action_log_prob(row, ls, u, a_et);
      buf_.value[row0 + e] = model_.value_norm.denormalize_scalar(yc[e]);
    }

    const auto k_next = static_cast<std::uint64_t>(progress_.episodes_per_env + 1);
    pool_->for_each(n, [&](int e) {
      try {
        results[e] = envs_[e].step(actions[e]);
        done[e] = results[e].done ? 1 : 0;
        if (done[e]) {
          next_obs[e] = envs_[e].reset(cfg_.seed, static_cast<std::uint64_t>(e) + static_cast<std::uint64_t>(n) * k_next);
        } else {
          next_obs[e] = results[e].observation;
        }
      } catch (const world::DivergenceError& err) {
        std::ostringstream msg;
        msg << "training diverged in env " << e << " (episode " << e + static_cast<std::uint64_t>(n) * (k_next - 1)
            << "): " << err.what();
        throw std::runtime_error(msg.str());
      }
    });

    bool any_done = false;
    for (int e = 0; e < n; ++e) {
      const auto& r = results[e];
      buf_.reward[row0 + e] = r.reward;
      buf_.done[row0 + e] = done[e];
      EpisodeAccum& a = accum_[e];
      a.ret += r.reward;
      a.force_sum += mean_force(r.info.force_trace);
      a.correct += ((beta_mean[e] > 0.5) == r.info.success) ? 1 : 0;
      ++a.steps;
      if (done[e]) {
        any_done = true;
        ++done_episodes_;
        sum_return_ += a.ret;
        sum_success_ += r.info.success ? 1.0 : 0.0;
        sum_force_ += a.force_sum / a.steps;
        sum_term_acc_ += static_cast<double>(a.correct) / a.steps;
        a = {};
      }
      current_obs_[e] = next_obs[e];
      starting_[e] = done[e];
    }
    if (any_done) {
      if (!std::all_of(done.begin(), done.end(), [](std::uint8_t d) { return d != 0; }))
        throw std::logic_error("trainer: environments fell out of step");
      ++progress_.episodes_per_env;
    }
  }
  progress_.env_steps += static_cast<std::int64_t>(n) * T;

  // bootstrap values; the carried hidden state is not advanced
  std::vector<float> xp(static_cast<std::size_t>(n) * kPriv), raw(xp.size());
  for (int e = 0; e < n; ++e) {
    const auto p = envs_[e].privileged().to_vector();
    for (int k = 0; k < kPriv; ++k) raw[static_cast<std::size_t>(e) * kPriv + k] = static_cast<float>(p[k]);
  }
  model_.priv_norm.normalize(raw.data(), xp.data(), static_cast<std::size_t>(n));
  nn::SequenceCache<float> cache;
  model_.critic.forward(1, n, xp.data(), h_critic_.data(), starting_.data(), yc.data(), cache);
  for (int e = 0; e < n; ++e) buf_.bootstrap[e] = model_.value_norm.denormalize_scalar(yc[e]);
}

UpdateStats Trainer::iterate() {
  collect();
  buf_.finish(cfg_.ppo.gamma, cfg_.ppo.gae_lambda);
  RandomStream rng(cfg_.seed, StreamKind::kTrainer, static_cast<std::uint64_t>(progress_.updates));
  const UpdateStats stats = ppo_update(model_, buf_, cfg_.ppo, current_lr(), opt_, rng);
  model_.obs_norm.update(buf_.raw_obs.data(), buf_.size());
  model_.priv_norm.update(buf_.raw_priv.data(), buf_.size());
  ++progress_.updates;
  sum_kl_ += stats.approx_kl;
  sum_clip_ += stats.clip_fraction;
  sum_entropy_ += stats.entropy;
  sum_vloss_ += stats.value_loss;
  ++updates_since_log_;
  return stats;
}

Checkpoint Trainer::checkpoint() const { return {cfg_, model_, opt_, progress_}; }

std::vector<std::filesystem::path> Trainer::run(const std::filesystem::path& dir,
                                                const std::function<void(const MetricRow&)>& on_log) {
  std::filesystem::create_directories(dir);
  const auto log_path = dir / kTrainLogName;
  prepare_log(log_path, progress_.env_steps);
  std::ofstream log(log_path, std::ios::app);
  std::vector<std::filesystem::path> written;
  const std::int64_t total = total_updates();
  while (progress_.updates < total) {
    const double lr = current_lr();
    iterate();
    const bool last = progress_.updates == total;
    if (progress_.updates % cfg_.train.log_interval == 0 || last) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double ne = done_episodes_;
      MetricRow row;
      row.step = progress_.env_steps;
      row.episodes = done_episodes_;
      row.episode_return = done_episodes_ ? sum_return_ / ne : nan;
      row.success_rate = done_episodes_ ? sum_success_ / ne : nan;
      row.f_mean = done_episodes_ ? sum_force_ / ne : nan;
      row.term_accuracy = done_episodes_ ? sum_term_acc_ / ne : nan;
      row.kl = sum_kl_ / updates_since_log_;
      row.clip_frac = sum_clip_ / updates_since_log_;
      row.entropy = sum_entropy_ / updates_since_log_;
      row.value_loss = sum_vloss_ / updates_since_log_;
      row.learning_rate = lr;
      log << format_row(row) << '\n';
      log.flush();
      if (on_log) on_log(row);
      done_episodes_ = 0;
      sum_return_ = sum_success_ = sum_force_ = sum_term_acc_ = 0.0;
      sum_kl_ = sum_clip_ = sum_entropy_ = sum_vloss_ = 0.0;
      updates_since_log_ = 0;
    }
    if (progress_.updates % cfg_.train.checkpoint_interval == 0 || last) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06lld.bin", static_cast<long long>(progress_.updates));
      save_checkpoint(dir / name, checkpoint());
      written.push_back(dir / name);
    }
  }
  return written;
}

}  // namespace forge::rl
