#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "forge/rl/actor_critic.hpp"
#include "forge/rl/distributions.hpp"
#include "forge/rl/gae.hpp"
#include "forge/rl/ppo.hpp"
#include "oracles.hpp"

using namespace forge;
using namespace forge::rl;

namespace {

PolicyConfig tiny_policy() {
  PolicyConfig p;
  p.hidden = {16, 16};
  p.gru_size = 8;
  return p;
}

std::vector<double> random_obs(RandomStream& rng, int rows) {
  std::vector<double> v(std::size_t(rows) * env::Observation::kSize);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

// GaeResult over plain vectors; std::vector<bool> has no contiguous storage.
GaeResult gae(const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& d, double boot,
              double gamma, double lambda) {
  std::unique_ptr<bool[]> flags(new bool[d.size()]);
  std::copy(d.begin(), d.end(), flags.get());
  return compute_gae(r, v, std::span<const bool>(flags.get(), d.size()), boot, gamma, lambda);
}

}  // namespace

TEST_CASE("actor sees only observation-sized input, critic the privileged state") {
  const PolicyConfig p;
  CHECK(p.actor_spec().input_dim == int(env::Observation::kSize));
  CHECK(p.critic_spec().input_dim == int(env::PrivilegedState::kSize));
  CHECK(p.actor_spec().output_dim == kActorOutputs);
  CHECK(p.critic_spec().output_dim == 1);
}

TEST_CASE("policy_forward: zero weights give a_ET = 0.5") {
  ActorCritic ac(tiny_policy(), 1);
  std::fill(ac.actor.params().begin(), ac.actor.params().end(), 0.0f);
  RandomStream rng(2);
  const auto step = policy_forward(ac, 3, 2, random_obs(rng, 6), std::vector<float>(16, 0.0f));
  REQUIRE(step.outputs.size() == 6);
  for (const auto& o : step.outputs) {
    CHECK(o.mode().termination == doctest::Approx(0.5));
    CHECK(o.termination.alpha == o.termination.beta);
    for (double s : o.log_std) CHECK(std::exp(s) > 0.0);
  }
}

TEST_CASE("policy_forward: pure, and the hidden state carries history") {
  ActorCritic ac(tiny_policy(), 3);
  RandomStream rng(4);
  const auto obs = random_obs(rng, 5);
  const std::vector<float> h(8, 0.0f);
  const auto a = policy_forward(ac, 5, 1, obs, h);
  const auto b = policy_forward(ac, 5, 1, obs, h);
  for (int i = 0; i < 5; ++i) CHECK(a.outputs[i].mean == b.outputs[i].mean);
  CHECK(a.hidden == b.hidden);

  auto other = obs;
  for (std::size_t i = 0; i < env::Observation::kSize; ++i) other[i] = -other[i];  // different first step
  const auto c = policy_forward(ac, 5, 1, other, h);
  CHECK(c.outputs[4].mean != a.outputs[4].mean);

  CHECK_THROWS_AS(policy_forward(ac, 5, 1, std::vector<double>(7), h), std::invalid_argument);
  CHECK_THROWS_AS(policy_forward(ac, 5, 1, obs, std::vector<float>(3)), std::invalid_argument);
}

TEST_CASE("deterministic policy: reset restores the initial state") {
  ActorCritic ac(tiny_policy(), 5);
  DeterministicPolicy pol(ac);
  env::PegInsertionEnv e(env::EnvConfig{});
  const env::Observation o = e.reset(1, 0);
  const env::Action first = pol.act(o);
  pol.act(o);
  pol.reset();
  CHECK(pol.act(o) == first);
  CHECK(first.termination >= 0.0);
  CHECK(first.termination <= 1.0);
  for (double a : first.pose) CHECK(std::abs(a) <= 1.0);
}

TEST_CASE("gae: examples and the discounted-sum oracle") {
  auto r = gae({1, 0}, {0, 0}, {false, false}, 0.0, 1.0, 1.0);
  CHECK(r.advantages == std::vector<double>{1, 0});
  r = gae({0, 0, 0}, {0, 0, 0}, {false, false, false}, 0.0, 0.99, 0.95);
  CHECK(r.advantages == std::vector<double>{0, 0, 0});
  CHECK_THROWS(gae({1, 2}, {0}, {false, false}, 0.0, 0.99, 0.95));

  RandomStream rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> rew(20), val(20);
    std::vector<bool> done(20);
    for (int t = 0; t < 20; ++t) {
      rew[t] = rng.uniform(-2, 3);
      val[t] = rng.uniform(-5, 5);
      done[t] = rng.canonical() < 0.1;
    }
    const double boot = rng.uniform(-5, 5), g = rng.uniform(0.9, 1.0), l = rng.uniform(0.8, 1.0);
    const auto got = gae(rew, val, done, boot, g, l);
    const auto want = oracle::gae(rew, val, done, boot, g, l);
    for (int t = 0; t < 20; ++t) {
      REQUIRE(std::abs(got.advantages[t] - want[t]) <= 1e-6);
      REQUIRE(got.returns[t] == doctest::Approx(got.advantages[t] + val[t]));
    }
  }
}

TEST_CASE("advantage normalization") {
  RandomStream rng(7);
  std::vector<double> a(4096);
  for (auto& x : a) x = rng.normal(3.0, 17.0);
  normalize_advantages(a);
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(std::sqrt(var / a.size()) - 1.0) < 1e-3);
}

TEST_CASE("surrogate: gradient matches central differences on a 10-parameter policy") {
  RandomStream rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> theta(10);  // 6 actor outputs + 4 log-stds
    for (int i = 0; i < 6; ++i) theta[i] = rng.uniform(-1, 1);
    for (int i = 6; i < 10; ++i) theta[i] = rng.uniform(-1.5, 0.0);
    double u[4];
    for (double& x : u) x = rng.uniform(-1.5, 1.5);
    const double term = rng.uniform(0.05, 0.95);
    // old policy close enough that the ratio sits inside the clip range
    const double old_lp = action_log_prob(theta.data(), theta.data() + 6, u, term) + rng.uniform(-0.1, 0.1);
    const SurrogateSample s{u, term, old_lp, rng.uniform(-2, 2)};
    const double clip = 0.2, ent = 0.01, term_ent = 0.05, w = 0.25;

    auto loss = [&](const std::vector<double>& th) {
      double scratch[10] = {};
      return surrogate_loss(th.data(), th.data() + 6, s, clip, ent, term_ent, w, scratch, scratch + 6).loss;
    };
    double grad[10] = {};
    surrogate_loss(theta.data(), theta.data() + 6, s, clip, ent, term_ent, w, grad, grad + 6);
    for (int i = 0; i < 10; ++i) {
      auto up = theta, down = theta;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double fd = (loss(up) - loss(down)) / 2e-6;
      CHECK(std::abs(grad[i] - fd) <= 1e-4 * std::max(std::abs(fd), std::abs(grad[i])) + 1e-9);
    }
  }
}

TEST_CASE("surrogate: clipped side carries only the entropy gradient") {
  double row[6] = {0.1, -0.2, 0.3, 0.0, 0.4, -0.1};
  double ls[4] = {-0.5, -0.5, -0.5, -0.5};
  double u[4] = {0.1, -0.2, 0.3, 0.0};
  const double lp = action_log_prob(row, ls, u, 0.5);
  // ratio e^1 > 1 + clip with positive advantage: surrogate is flat
  const SurrogateSample s{u, 0.5, lp - 1.0, 1.0};
  double d[10] = {};
  const auto t = surrogate_loss(row, ls, s, 0.2, 0.0, 0.0, 1.0, d, d + 6);
  CHECK(t.ratio == doctest::Approx(std::exp(1.0)));
  for (double g : d) CHECK(g == 0.0);
}

TEST_CASE("surrogate: each entropy coefficient acts only on its own head") {
  double row[6] = {0.1, -0.2, 0.3, 0.0, 0.4, -0.1};
  double ls[4] = {-0.5, -0.4, -0.3, -0.2};
  double u[4] = {0.1, -0.2, 0.3, 0.0};
  const double lp = action_log_prob(row, ls, u, 0.5);
  // saturated clip: only entropy gradients remain
  const SurrogateSample s{u, 0.5, lp - 1.0, 1.0};

  double pose_only[10] = {};
  const auto a = surrogate_loss(row, ls, s, 0.2, 0.1, 0.0, 1.0, pose_only, pose_only + 6);
  for (int i = 0; i < 6; ++i) CHECK(pose_only[i] == 0.0);
  for (int i = 6; i < 10; ++i) CHECK(pose_only[i] == doctest::Approx(-0.1));

  double term_only[10] = {};
  const auto b = surrogate_loss(row, ls, s, 0.2, 0.0, 0.1, 1.0, term_only, term_only + 6);
  for (int i = 0; i < 4; ++i) CHECK(term_only[i] == 0.0);
  for (int i = 6; i < 10; ++i) CHECK(term_only[i] == 0.0);
  CHECK(term_only[4] != 0.0);

  // bonus recomputed from the closed forms of each head
  const BetaDist beta = BetaDist::from_raw(row[4], row[5]);
  double gauss = 0.0;
  for (double x : ls) gauss += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + x;
  CHECK(a.entropy_bonus == doctest::Approx(0.1 * gauss).epsilon(1e-12));
  CHECK(b.entropy_bonus == doctest::Approx(0.1 * beta.entropy()).epsilon(1e-12));
  CHECK(a.entropy == doctest::Approx(gauss + beta.entropy()).epsilon(1e-12));
}

TEST_CASE("beta head: density, gradients and entropy") {
  const BetaDist flat = BetaDist::from_raw(-50.0, -50.0);
  CHECK(flat.alpha == doctest::Approx(1.0));
  CHECK(flat.log_prob(0.3) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flat.entropy() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(BetaDist::from_raw(0.0, 0.0).mean() == 0.5);

  RandomStream rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(1.0, 8.0), b = rng.uniform(1.0, 8.0), x = rng.uniform(0.02, 0.98);
    double da = 0.0, db = 0.0;
    BetaDist{a, b}.log_prob_grad(x, da, db);
    const double h = 1e-6;
    CHECK(da == doctest::Approx((BetaDist{a + h, b}.log_prob(x) - BetaDist{a - h, b}.log_prob(x)) / (2 * h)).epsilon(1e-5));
    CHECK(db == doctest::Approx((BetaDist{a, b + h}.log_prob(x) - BetaDist{a, b - h}.log_prob(x)) / (2 * h)).epsilon(1e-5));
    BetaDist{a, b}.entropy_grad(da, db);
    CHECK(da == doctest::Approx((BetaDist{a + h, b}.entropy() - BetaDist{a - h, b}.entropy()) / (2 * h)).epsilon(1e-5));
    CHECK(db == doctest::Approx((BetaDist{a, b + h}.entropy() - BetaDist{a, b - h}.entropy()) / (2 * h)).epsilon(1e-5));
  }
  // samples stay in [0, 1] with the right mean
  const BetaDist d{2.0, 5.0};
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = d.sample(rng);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    sum += x;
  }
  CHECK(sum / 20000 == doctest::Approx(2.0 / 7.0).epsilon(0.02));
}

TEST_CASE("gaussian term: log density and entropy") {
  CHECK(GaussianTerm::log_prob(0.0, 0.0, 0.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
  CHECK(GaussianTerm::entropy(0.0) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)));
  double dm = 0, ds = 0;
  GaussianTerm::log_prob_grad(1.0, 0.0, 0.0, dm, ds);
  CHECK(dm == doctest::Approx(1.0));
  CHECK(ds == doctest::Approx(0.0));
}

namespace {

RolloutBuffer random_buffer(const ActorCritic& ac, int envs, int horizon, RandomStream& rng) {
  RolloutBuffer buf;
  buf.resize(envs, horizon, ac.config.gru_size);
  for (auto& x : buf.obs) x = float(rng.uniform(-1, 1));
  for (auto& x : buf.priv) x = float(rng.uniform(-1, 1));
  for (auto& x : buf.pre_squash) x = float(rng.uniform(-1, 1));
  for (auto& x : buf.termination) x = rng.uniform(0.1, 0.9);
  for (auto& x : buf.log_prob) x = rng.uniform(-6, -2);
  for (auto& x : buf.returns) x = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < buf.size(); ++i) buf.episode_start[i] = i < std::size_t(envs);
  return buf;
}

}  // namespace

TEST_CASE("ppo_update: zero advantages leave the policy untouched without entropy") {
  ActorCritic ac(tiny_policy(), 10);
  RandomStream rng(11);
  RolloutBuffer buf = random_buffer(ac, 4, 8, rng);
  std::fill(buf.advantages.begin(), buf.advantages.end(), 0.0);
  PpoConfig cfg;
  cfg.num_envs = 4;
  cfg.horizon = 8;
  cfg.minibatches = 2;
  cfg.entropy_coef = 0.0;
  cfg.termination_entropy_coef = 0.0;
  Optimizers opt(ac);
  const std::vector<float> actor(ac.actor.params().begin(), ac.actor.params().end());
  const std::vector<float> critic(ac.critic.params().begin(), ac.critic.params().end());
  const std::vector<float> log_std = ac.log_std;
  const UpdateStats st = ppo_update(ac, buf, cfg, 3e-4, opt, rng);
  CHECK(std::equal(actor.begin(), actor.end(), ac.actor.params().begin()));
  CHECK(ac.log_std == log_std);
  CHECK_FALSE(std::equal(critic.begin(), critic.end(), ac.critic.params().begin()));
  CHECK(st.policy_loss == doctest::Approx(0.0));
}

TEST_CASE("ppo_update: statistics stay in range") {
  ActorCritic ac(tiny_policy(), 12);
  RandomStream rng(13);
  PpoConfig cfg;
  cfg.num_envs = 4;
  cfg.horizon = 8;
  cfg.minibatches = 2;
  Optimizers opt(ac);
  for (int round = 0; round < 5; ++round) {
    RolloutBuffer buf = random_buffer(ac, 4, 8, rng);
    for (auto& x : buf.advantages) x = rng.normal(0.0, 3.0);
    const UpdateStats st = ppo_update(ac, buf, cfg, 1e-2, opt, rng);
    CHECK(st.clip_fraction >= 0.0);
    CHECK(st.clip_fraction <= 1.0);
    CHECK(st.approx_kl >= 0.0);
    CHECK(std::isfinite(st.value_loss));
  }
}

TEST_CASE("ppo config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.minibatches = 3;  // 128 envs do not split into 3
  CHECK_THROWS(cfg.validate());
}
