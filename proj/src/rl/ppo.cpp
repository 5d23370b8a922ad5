#include "forge/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "forge/rl/gae.hpp"

namespace forge::rl {

void PpoConfig::validate() const {
  if (num_envs <= 0 || horizon <= 0 || epochs <= 0 || minibatches <= 0)
    throw std::invalid_argument("ppo: num_envs, horizon, epochs and minibatches must be positive");
  if (num_envs % minibatches != 0) throw std::invalid_argument("ppo: num_envs must be divisible by minibatches");
  if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip must be > 0");
  if (!(entropy_coef >= 0.0) || !(termination_entropy_coef >= 0.0) || !(value_coef >= 0.0)) throw std::invalid_argument("ppo: loss coefficients must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0) || !(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("ppo: gamma in (0, 1] and gae_lambda in [0, 1] required");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo: learning_rate must be > 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("ppo: max_grad_norm must be > 0");
}

void RolloutBuffer::resize(int envs, int steps, int gru) {
  num_envs = envs;
  horizon = steps;
  gru_size = gru;
  const std::size_t n = size();
  obs.assign(n * env::Observation::kSize, 0.0f);
  raw_obs.assign(obs.size(), 0.0f);
  priv.assign(n * env::PrivilegedState::kSize, 0.0f);
  raw_priv.assign(priv.size(), 0.0f);
  pre_squash.assign(n * kPoseDims, 0.0f);
  termination.assign(n, 0.0);
  log_prob.assign(n, 0.0);
  reward.assign(n, 0.0);
  value.assign(n, 0.0);
  done.assign(n, 0);
  episode_start.assign(n, 0);
  actor_h0.assign(static_cast<std::size_t>(envs) * gru, 0.0f);
  critic_h0.assign(actor_h0.size(), 0.0f);
  bootstrap.assign(static_cast<std::size_t>(envs), 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
}

void RolloutBuffer::finish(double gamma, double lambda) {
  std::vector<double> r(horizon), v(horizon);
  for (int e = 0; e < num_envs; ++e) {
    std::unique_ptr<bool[]> dones(new bool[horizon]);
    for (int t = 0; t < horizon; ++t) {
      const std::size_t i = static_cast<std::size_t>(t) * num_envs + e;
      r[t] = reward[i];
      v[t] = value[i];
      dones[t] = done[i] != 0;
    }
    const GaeResult g = compute_gae(r, v, std::span<const bool>(dones.get(), horizon), bootstrap[e], gamma, lambda);
    for (int t = 0; t < horizon; ++t) {
      const std::size_t i = static_cast<std::size_t>(t) * num_envs + e;
      advantages[i] = g.advantages[t];
      returns[i] = g.returns[t];
    }
  }
}

double action_log_prob(const double* row, const double* log_std, const double* u, double termination) {
  double lp = 0.0;
  for (int i = 0; i < kPoseDims; ++i) lp += GaussianTerm::log_prob(u[i], row[i], log_std[i]);
  return lp + BetaDist::from_raw(row[kPoseDims], row[kPoseDims + 1]).log_prob(termination);
}

SurrogateTerms surrogate_loss(const double* row, const double* log_std, const SurrogateSample& s, double clip,
                              double entropy_coef, double termination_entropy_coef, double weight, double* d_row,
                              double* d_log_std) {
  SurrogateTerms out;
  const BetaDist beta = BetaDist::from_raw(row[kPoseDims], row[kPoseDims + 1]);
  out.log_prob = action_log_prob(row, log_std, s.pre_squash, s.termination);
  out.ratio = std::exp(out.log_prob - s.old_log_prob);
  const double surr1 = out.ratio * s.advantage;
  const double clipped = std::clamp(out.ratio, 1.0 - clip, 1.0 + clip);
  const double surr2 = clipped * s.advantage;
  double pose_entropy = 0.0;
  for (int i = 0; i < kPoseDims; ++i) pose_entropy += GaussianTerm::entropy(log_std[i]);
  const double term_entropy = beta.entropy();
  out.entropy = pose_entropy + term_entropy;
  out.entropy_bonus = entropy_coef * pose_entropy + termination_entropy_coef * term_entropy;
  out.loss = weight * (-std::min(surr1, surr2) - out.entropy_bonus);

  // d loss / d log_prob; zero where the clipped branch is selected and saturated
  const bool unclipped = surr1 <= surr2 || (out.ratio > 1.0 - clip && out.ratio < 1.0 + clip);
  const double g_lp = unclipped ? -weight * s.advantage * out.ratio : 0.0;
  const double g_ent = -weight * entropy_coef;
  const double g_term_ent = -weight * termination_entropy_coef;

  for (int i = 0; i < kPoseDims; ++i) {
    double dm = 0.0;
    double ds = 0.0;
    GaussianTerm::log_prob_grad(s.pre_squash[i], row[i], log_std[i], dm, ds);
    d_row[i] = g_lp * dm;
    d_log_std[i] += g_lp * ds + g_ent;  // d entropy / d log_std = 1
  }
  double la = 0.0, lb = 0.0, ea = 0.0, eb = 0.0;
  beta.log_prob_grad(s.termination, la, lb);
  beta.entropy_grad(ea, eb);
  d_row[kPoseDims] = (g_lp * la + g_term_ent * ea) * BetaDist::d_param_d_raw(row[kPoseDims]);
  d_row[kPoseDims + 1] = (g_lp * lb + g_term_ent * eb) * BetaDist::d_param_d_raw(row[kPoseDims + 1]);
  return out;
}

Optimizers::Optimizers(const ActorCritic& ac)
    : actor(ac.actor.params().size()), log_std(ac.log_std.size()), critic(ac.critic.params().size()) {}

namespace {

void shuffle(std::vector<int>& idx, RandomStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.canonical() * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
}

}  // namespace

UpdateStats ppo_update(ActorCritic& ac, RolloutBuffer& buf, const PpoConfig& cfg, double lr, Optimizers& opt,
                       RandomStream& rng) {
  const int n_env = buf.num_envs;
  const int T = buf.horizon;
  const int G = buf.gru_size;
  const int B = n_env / cfg.minibatches;
  const int rows = T * B;
  constexpr int kObs = static_cast<int>(env::Observation::kSize);
  constexpr int kPriv = static_cast<int>(env::PrivilegedState::kSize);

  std::vector<float> ret_f(buf.returns.begin(), buf.returns.end());
  ac.value_norm.update(ret_f.data(), ret_f.size());
  std::vector<double> adv = buf.advantages;
  normalize_advantages(adv);

  std::vector<float> x(static_cast<std::size_t>(rows) * kObs), p(static_cast<std::size_t>(rows) * kPriv);
  std::vector<std::uint8_t> reset(static_cast<std::size_t>(rows));
  std::vector<float> ha(static_cast<std::size_t>(B) * G), hc(ha.size());
  std::vector<float> ya(static_cast<std::size_t>(rows) * kActorOutputs), yc(static_cast<std::size_t>(rows));
  std::vector<float> dya(ya.size()), dyc(yc.size());
  std::vector<int> src(static_cast<std::size_t>(rows));
  nn::SequenceCache<float> ca, cc;
  std::vector<int> order(static_cast<std::size_t>(n_env));
  for (int e = 0; e < n_env; ++e) order[e] = e;

  UpdateStats stats;
  int batches = 0;
  double clipped = 0.0;
  double samples = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      for (int b = 0; b < B; ++b) {
        const int e = order[static_cast<std::size_t>(mb) * B + b];
        std::copy_n(&buf.actor_h0[static_cast<std::size_t>(e) * G], G, &ha[static_cast<std::size_t>(b) * G]);
        std::copy_n(&buf.critic_h0[static_cast<std::size_t>(e) * G], G, &hc[static_cast<std::size_t>(b) * G]);
        for (int t = 0; t < T; ++t) {
          const int r = t * B + b;
          const int i = t * n_env + e;
          src[r] = i;
          std::copy_n(&buf.obs[static_cast<std::size_t>(i) * kObs], kObs, &x[static_cast<std::size_t>(r) * kObs]);
          std::copy_n(&buf.priv[static_cast<std::size_t>(i) * kPriv], kPriv, &p[static_cast<std::size_t>(r) * kPriv]);
          reset[r] = buf.episode_start[i];
        }
      }
      ac.actor.forward(T, B, x.data(), ha.data(), reset.data(), ya.data(), ca);
      ac.critic.forward(T, B, p.data(), hc.data(), reset.data(), yc.data(), cc);

      const double weight = 1.0 / rows;
      double log_std[kPoseDims], d_log_std[kPoseDims] = {0, 0, 0, 0};
      for (int i = 0; i < kPoseDims; ++i) log_std[i] = ac.log_std[i];
      double pl = 0.0, vl = 0.0, ent = 0.0, bonus = 0.0, kl = 0.0;
      for (int r = 0; r < rows; ++r) {
        const int i = src[r];
        double row[kActorOutputs], d_row[kActorOutputs];
        for (int k = 0; k < kActorOutputs; ++k) row[k] = ya[static_cast<std::size_t>(r) * kActorOutputs + k];
        double u[kPoseDims];
        for (int k = 0; k < kPoseDims; ++k) u[k] = buf.pre_squash[static_cast<std::size_t>(i) * kPoseDims + k];
        const SurrogateSample s{u, buf.termination[i], buf.log_prob[i], adv[i]};
        const SurrogateTerms terms = surrogate_loss(row, log_std, s, cfg.clip, cfg.entropy_coef,
                                                      cfg.termination_entropy_coef, weight, d_row, d_log_std);
        for (int k = 0; k < kActorOutputs; ++k) dya[static_cast<std::size_t>(r) * kActorOutputs + k] = static_cast<float>(d_row[k]);
        pl += terms.loss + weight * terms.entropy_bonus;
        ent += weight * terms.entropy;
        bonus += weight * terms.entropy_bonus;
        const double log_ratio = terms.log_prob - buf.log_prob[i];
        kl += weight * (std::exp(log_ratio) - 1.0 - log_ratio);
        if (std::abs(terms.ratio - 1.0) > cfg.clip) clipped += 1.0;
        samples += 1.0;

        const double target = ac.value_norm.normalize_scalar(static_cast<float>(buf.returns[i]));
        const double diff = yc[r] - target;
        vl += weight * diff * diff;
        dyc[r] = static_cast<float>(cfg.value_coef * 2.0 * weight * diff);
      }
      const double total = pl + cfg.value_coef * vl - bonus;
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (policy " << pl << ", value " << vl << ", entropy " << ent << ", epoch "
            << epoch << ", minibatch " << mb << ")";
        throw std::runtime_error(msg.str());
      }

      ac.actor.zero_grad();
      ac.critic.zero_grad();
      ac.actor.backward(ca, dya.data());
      ac.critic.backward(cc, dyc.data());
      std::vector<float> g_log_std(kPoseDims);
      for (int k = 0; k < kPoseDims; ++k) g_log_std[k] = static_cast<float>(d_log_std[k]);
      const std::span<float> groups[] = {ac.actor.grads(), ac.critic.grads(), g_log_std};
      stats.grad_norm += nn::clip_grad_norm(groups, cfg.max_grad_norm);
      const auto flr = static_cast<float>(lr);
      opt.actor.step(ac.actor.params(), ac.actor.grads(), flr);
      opt.critic.step(ac.critic.params(), ac.critic.grads(), flr);
      opt.log_std.step(ac.log_std, g_log_std, flr);

      stats.policy_loss += pl;
      stats.value_loss += vl;
      stats.entropy += ent;
      stats.approx_kl += kl;
      ++batches;
    }
  }
  stats.policy_loss /= batches;
  stats.value_loss /= batches;
  stats.entropy /= batches;
  stats.approx_kl /= batches;
  stats.grad_norm /= batches;
  stats.clip_fraction = samples > 0.0 ? clipped / samples : 0.0;
  return stats;
}

}  // namespace forge::rl
