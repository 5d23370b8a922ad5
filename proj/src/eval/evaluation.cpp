#include "forge/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "forge/core/parallel.hpp"
#include "forge/rl/checkpoint.hpp"
#include "forge/world/world.hpp"

namespace forge::eval {

EpisodeTrace record_episode(env::PegInsertionEnv& env, rl::DeterministicPolicy& policy, std::uint64_t master_seed,
                            std::uint64_t episode, const env::EpisodeOptions& options,
                            std::optional<double> stop_p_term) {
  EpisodeTrace tr;
  tr.episode = episode;
  tr.horizon = env.config().reward.episode_length;
  env::Observation obs = env.reset(master_seed, episode, options);
  policy.reset();
  tr.pose_error_norm = env.pose_error().norm();
  tr.kp = env.dynamics().kp;
  tr.force_threshold = env.dynamics().force_threshold;
  for (int t = 0; t < tr.horizon; ++t) {
    const env::Action a = policy.act(obs);
    env::StepResult r;
    try {
      r = env.step(a);
    } catch (const world::DivergenceError&) {
      tr.diverged = true;
      break;
    }
    double fsum = 0.0, fmax = 0.0;
    for (double f : r.info.force_trace) {
      fsum += f;
      fmax = std::max(fmax, f);
    }
    tr.a_et.push_back(a.termination);
    tr.success.push_back(r.info.success ? 1 : 0);
    tr.force_mean.push_back(r.info.force_trace.empty() ? 0.0 : fsum / static_cast<double>(r.info.force_trace.size()));
    tr.force_max.push_back(fmax);
    obs = r.observation;
    if (stop_p_term && a.termination > *stop_p_term) break;
  }
  return tr;
}

namespace {

EpisodeResult resolve_at(const EpisodeTrace& tr, int term, TerminatedBy by) {
  EpisodeResult r;
  r.episode = tr.episode;
  r.termination_step = term;
  r.terminated_by = by;
  r.pose_error_norm = tr.pose_error_norm;
  r.gains_used = tr.kp;
  r.force_threshold = tr.force_threshold;
  r.diverged = tr.diverged && term == tr.executed_steps() && by == TerminatedBy::kFixedHorizon;
  r.a_et.assign(tr.a_et.begin(), tr.a_et.begin() + term);
  double fsum = 0.0;
  for (int i = 0; i < term; ++i) {
    fsum += tr.force_mean[i];
    r.f_max = std::max(r.f_max, tr.force_max[i]);
    if (!r.first_success_step && tr.success[i]) r.first_success_step = i + 1;
  }
  r.f_mean = term > 0 ? fsum / term : 0.0;
  r.success = term > 0 && !r.diverged && tr.success[term - 1] != 0;
  return r;
}

}  // namespace

EpisodeResult resolve_predicted(const EpisodeTrace& tr, double p_term) {
  const int n = tr.executed_steps();
  for (int i = 0; i < n; ++i) {
    if (tr.a_et[i] > p_term) return resolve_at(tr, i + 1, TerminatedBy::kPredicted);
  }
  return resolve_at(tr, n, TerminatedBy::kFixedHorizon);
}

EpisodeResult resolve_fixed(const EpisodeTrace& tr, int steps) {
  if (steps <= 0) throw std::invalid_argument("resolve_fixed: steps must be positive");
  return resolve_at(tr, std::min(steps, tr.executed_steps()), TerminatedBy::kFixedHorizon);
}

EpisodeResult run_episode(env::PegInsertionEnv& env, rl::DeterministicPolicy& policy, double p_term,
                          std::uint64_t master_seed, std::uint64_t episode, const env::EpisodeOptions& options) {
  if (!(p_term >= 0.0 && p_term <= 1.0)) throw std::invalid_argument("run_episode: p_term must lie in [0, 1]");
  return resolve_predicted(record_episode(env, policy, master_seed, episode, options, p_term), p_term);
}

MetricsSummary compute_metrics(const std::vector<EpisodeResult>& results, double rate) {
  if (results.empty()) throw std::invalid_argument("compute_metrics: no results");
  MetricsSummary m;
  m.episodes = static_cast<int>(results.size());
  int successes = 0, predicted = 0, predicted_success = 0;
  double steps = 0.0;
  for (const auto& r : results) {
    successes += r.success;
    const bool pred = r.terminated_by == TerminatedBy::kPredicted;
    predicted += pred;
    predicted_success += pred && r.success;
    steps += r.termination_step;
    m.f_mean += r.f_mean;
    m.f_max += r.f_max;
    m.divergences += r.diverged;
  }
  const double n = m.episodes;
  m.success_rate = successes / n;
  if (m.episodes > 1) {
    double ss = 0.0;
    for (const auto& r : results) {
      const double d = (r.success ? 1.0 : 0.0) - m.success_rate;
      ss += d * d;
    }
    m.success_se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  m.duration_s = steps / n / rate;
  m.f_mean /= n;
  m.f_max /= n;
  if (predicted > 0) m.precision = static_cast<double>(predicted_success) / predicted;
  if (successes > 0) m.recall = static_cast<double>(predicted_success) / successes;
  return m;
}

std::vector<double> default_p_term_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(i * 0.05);
  return g;
}

namespace {

TradeoffPoint summarize(const std::string& method, double param, const std::vector<EpisodeResult>& rs, double rate) {
  TradeoffPoint p{method, param, 0.0, std::nullopt};
  int succ = 0;
  double delay = 0.0;
  for (const auto& r : rs) {
    if (!r.success) continue;
    ++succ;
    delay += (r.termination_step - *r.first_success_step) / rate;
  }
  p.success_rate = rs.empty() ? 0.0 : static_cast<double>(succ) / static_cast<double>(rs.size());
  if (succ > 0) p.delay_s = delay / succ;
  return p;
}

void sort_curve(std::vector<TradeoffPoint>& c) {
  std::stable_sort(c.begin(), c.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.success_rate < b.success_rate || (a.success_rate == b.success_rate && a.param < b.param);
  });
}

}  // namespace

TradeoffCurves termination_tradeoff(const std::vector<EpisodeTrace>& traces, const std::vector<double>& p_grid,
                                    double rate) {
  TradeoffCurves c;
  if (traces.empty()) return c;
  std::vector<EpisodeResult> rs(traces.size());
  for (double p : p_grid) {
    for (std::size_t i = 0; i < traces.size(); ++i) rs[i] = resolve_predicted(traces[i], p);
    c.pred.push_back(summarize("pred", p, rs, rate));
  }
  const int horizon = traces.front().horizon;
  for (int T = 1; T <= horizon; ++T) {
    for (std::size_t i = 0; i < traces.size(); ++i) rs[i] = resolve_fixed(traces[i], T);
    c.fixed.push_back(summarize("fixed", T, rs, rate));
  }
  sort_curve(c.pred);
  sort_curve(c.fixed);
  return c;
}

std::optional<double> delay_at_success(const std::vector<TradeoffPoint>& curve, double level) {
  std::optional<double> best;
  for (const auto& p : curve) {
    if (p.success_rate >= level && p.delay_s && (!best || *p.delay_s < *best)) best = p.delay_s;
  }
  return best;
}

std::vector<NoiseBand> standard_bands() {
  return {{"low", 0.0, 0.001, false}, {"medium", 0.001, 0.0025, false}, {"high", 0.0025, 0.005, true}};
}

int band_index(double e) {
  const auto bands = standard_bands();
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& b = bands[i];
    if (e >= b.lo && (e < b.hi || (b.closed_hi && e <= b.hi))) return static_cast<int>(i);
  }
  return -1;
}

std::vector<BandRate> noise_breakdown(const std::vector<EpisodeResult>& results) {
  std::vector<BandRate> out;
  for (const auto& b : standard_bands()) out.push_back({b, 0, 0, std::nullopt});
  for (const auto& r : results) {
    const int i = band_index(r.pose_error_norm);
    if (i < 0) continue;
    ++out[i].episodes;
    out[i].successes += r.success;
  }
  for (auto& b : out) {
    if (b.episodes > 0) b.success_rate = static_cast<double>(b.successes) / b.episodes;
  }
  return out;
}

std::uint64_t evaluation_seed(std::uint64_t run_seed, std::uint64_t purpose) {
  return derive_seed(run_seed, StreamKind::kEvaluation, purpose);
}

std::vector<EpisodeTrace> run_traces(const rl::ActorCritic& model, const env::EnvConfig& env_cfg,
                                     const EvalRequest& req) {
  if (req.episodes <= 0) throw std::invalid_argument("evaluation: episodes must be positive");
  if (req.conditions.empty()) throw std::invalid_argument("evaluation: no conditions");
  std::vector<EpisodeTrace> out(static_cast<std::size_t>(req.episodes));
  WorkerPool pool(std::max(1, std::min(req.threads, req.episodes)));
  pool.for_each(req.episodes, [&](int i) {
    env::PegInsertionEnv env(env_cfg);
    rl::DeterministicPolicy policy(model);
    const auto& opts = req.conditions[static_cast<std::size_t>(i) % req.conditions.size()];
    out[i] = record_episode(env, policy, req.seed, req.first_episode + static_cast<std::uint64_t>(i), opts,
                            req.stop_p_term);
  });
  return out;
}

std::vector<env::EpisodeOptions> band_conditions(const std::string& band, std::optional<double> kp,
                                                 std::optional<double> force_threshold) {
  std::vector<NoiseBand> chosen;
  const auto all = standard_bands();
  if (band == "low") {
    chosen = {all[0]};
  } else if (band == "medium") {
    chosen = {all[1]};
  } else if (band == "high") {
    chosen = {all[2]};
  } else if (band == "all") {
    chosen = all;
  } else if (band == "lowmed") {
    chosen = {all[0], all[1]};
  } else {
    throw std::invalid_argument("unknown noise band '" + band + "' (expected low, medium, high, all or lowmed)");
  }
  std::vector<env::EpisodeOptions> out;
  for (const auto& b : chosen) {
    env::EpisodeOptions o;
    o.pose_error_mode = env::PoseErrorMode::kRing;
    o.ring_min = b.lo;
    o.ring_max = b.hi;
    o.kp_override = kp;
    o.force_threshold_override = force_threshold;
    out.push_back(o);
  }
  return out;
}

std::vector<double> default_gains() { return {400.0, 500.0, 600.0, 700.0, 800.0}; }

std::vector<GainResult> gain_sweep(const rl::ActorCritic& model, const env::EnvConfig& env_cfg,
                                   const std::vector<double>& gains, int episodes, std::uint64_t seed,
                                   double p_term, const std::string& band, double force_threshold, int threads) {
  std::vector<GainResult> out;
  const double rate = 1.0 / env_cfg.policy_dt();
  for (double kp : gains) {
    EvalRequest req;
    req.seed = seed;
    req.episodes = episodes;
    req.conditions = band_conditions(band, kp, force_threshold);
    req.stop_p_term = p_term;
    req.threads = threads;
    const auto traces = run_traces(model, env_cfg, req);
    std::vector<EpisodeResult> rs;
    GainResult g;
    g.kp = kp;
    for (const auto& t : traces) {
      rs.push_back(resolve_predicted(t, p_term));
      g.f_means.push_back(rs.back().f_mean);
    }
    g.summary = compute_metrics(rs, rate);
    out.push_back(std::move(g));
  }
  return out;
}

SelectionResult select_checkpoint(const std::vector<std::filesystem::path>& paths, int episodes, int threads) {
  if (paths.empty()) throw std::invalid_argument("select_checkpoint: no checkpoints");
  SelectionResult out;
  double best_rate = -1.0, best_force = 0.0;
  for (const auto& p : paths) {
    const rl::Checkpoint c = rl::load_checkpoint(p);
    EvalRequest req;
    req.seed = evaluation_seed(c.config.seed, 1);
    req.episodes = episodes;
    req.conditions = band_conditions("all", std::nullopt, kDeploymentForceThreshold);
    req.threads = threads;
    const auto traces = run_traces(c.model, c.config.env, req);
    std::vector<EpisodeResult> rs;
    for (const auto& t : traces) rs.push_back(resolve_predicted(t, kDefaultPTerm));
    const MetricsSummary m = compute_metrics(rs, 1.0 / c.config.env.policy_dt());
    out.success_rates.push_back(m.success_rate);
    if (m.success_rate > best_rate || (m.success_rate == best_rate && m.f_mean <= best_force)) {
      best_rate = m.success_rate;
      best_force = m.f_mean;
      out.best = p;
    }
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, MetricsSummary>>& rows) {
  auto out = open_csv(path);
  out << "condition,episodes,success_rate,success_se,duration_s,f_mean_n,f_max_n,precision,recall,divergences\n";
  for (const auto& [name, m] : rows) {
    out << name << ',' << m.episodes << ',' << num(m.success_rate) << ',' << num(m.success_se) << ','
        << num(m.duration_s) << ',' << num(m.f_mean) << ',' << num(m.f_max) << ',' << opt(m.precision) << ','
        << opt(m.recall) << ',' << m.divergences << '\n';
  }
}

void write_episodes_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, std::vector<EpisodeResult>>>& groups, double rate) {
  auto out = open_csv(path);
  out << "condition,episode,success,first_success_step,termination_step,terminated_by,duration_s,f_mean_n,f_max_n,"
         "pose_error_mm,kp,force_threshold_n,diverged\n";
  for (const auto& [name, rs] : groups) {
    for (const auto& r : rs) {
      out << name << ',' << r.episode << ',' << (r.success ? 1 : 0) << ','
          << (r.first_success_step ? std::to_string(*r.first_success_step) : std::string()) << ','
          << r.termination_step << ',' << (r.terminated_by == TerminatedBy::kPredicted ? "predicted" : "fixed_horizon")
          << ',' << num(r.termination_step / rate) << ',' << num(r.f_mean) << ',' << num(r.f_max) << ','
          << num(r.pose_error_norm * 1000.0) << ',' << num(r.gains_used) << ',' << num(r.force_threshold) << ','
          << (r.diverged ? 1 : 0) << '\n';
    }
  }
}

void write_tradeoff_csv(const std::filesystem::path& path, const TradeoffCurves& curves) {
  auto out = open_csv(path);
  out << "method,param,success_rate,delay_s\n";
  for (const auto* c : {&curves.pred, &curves.fixed}) {
    for (const auto& p : *c) out << p.method << ',' << num(p.param) << ',' << num(p.success_rate) << ',' << opt(p.delay_s) << '\n';
  }
}

void write_noise_rings_csv(const std::filesystem::path& path, const std::vector<BandRate>& bands) {
  auto out = open_csv(path);
  out << "band,lo_mm,hi_mm,episodes,successes,success_rate\n";
  for (const auto& b : bands) {
    out << b.band.name << ',' << num(b.band.lo * 1000.0) << ',' << num(b.band.hi * 1000.0) << ',' << b.episodes << ','
        << b.successes << ',' << opt(b.success_rate) << '\n';
  }
}

void write_gain_sweep_csv(const std::filesystem::path& path, const std::vector<GainResult>& gains) {
  auto out = open_csv(path);
  out << "kp,episodes,success_rate,success_se,duration_s,f_mean_n,f_mean_p10_n,f_mean_p50_n,f_mean_p90_n,f_max_n\n";
  for (const auto& g : gains) {
    std::vector<double> f = g.f_means;
    std::sort(f.begin(), f.end());
    const auto q = [&](double p) {
      const std::size_t i = static_cast<std::size_t>(std::lround(p * static_cast<double>(f.size() - 1)));
      return f[i];
    };
    const auto& m = g.summary;
    out << num(g.kp) << ',' << m.episodes << ',' << num(m.success_rate) << ',' << num(m.success_se) << ','
        << num(m.duration_s) << ',' << num(m.f_mean) << ',' << num(q(0.1)) << ',' << num(q(0.5)) << ','
        << num(q(0.9)) << ',' << num(m.f_max) << '\n';
  }
}

}  // namespace forge::eval
