#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "forge/rl/checkpoint.hpp"
#include "forge/rl/trainer.hpp"

using namespace forge;
using namespace forge::rl;
namespace fs = std::filesystem;

namespace {

config::RunConfig smoke_config(int threads) {
  config::RunConfig cfg = config::make_preset("peg_8mm");
  cfg.seed = 5;
  cfg.threads = threads;
  cfg.policy.hidden = {16, 16};
  cfg.policy.gru_size = 8;
  cfg.ppo.num_envs = 4;
  cfg.ppo.horizon = 16;
  cfg.ppo.minibatches = 2;
  cfg.train.total_steps = 2 * 4 * 16;  // 2 updates
  cfg.train.checkpoint_interval = 1;
  cfg.train.log_interval = 1;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "forge_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("trainer: smoke run writes a loadable checkpoint and a log") {
  const fs::path dir = fresh_dir("smoke");
  Trainer t(smoke_config(1));
  CHECK(t.total_updates() == 2);
  const auto ckpts = t.run(dir);
  REQUIRE(ckpts.size() == 2);
  const Checkpoint c = load_checkpoint(ckpts.back());
  CHECK(c.progress.updates == 2);
  CHECK(c.progress.env_steps == 128);
  CHECK(c.optimizers.has_value());
  const std::string log = slurp(dir / kTrainLogName);
  CHECK(log.rfind("step,return,success_rate,f_mean,term_accuracy,kl,clip_frac\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("trainer: the update count never overruns the step budget") {
  config::RunConfig cfg = smoke_config(1);
  const std::int64_t per = cfg.ppo.num_envs * cfg.ppo.horizon;
  for (std::int64_t budget : {per * 3 - 1, per * 3, per * 3 + 1, per - 1, std::int64_t{1}}) {
    cfg.train.total_steps = budget;
    const std::int64_t n = Trainer(cfg).total_updates();
    CHECK(n >= 1);
    if (budget >= per) {
      CHECK(n * per <= budget);
      CHECK((n + 1) * per > budget);
    } else {
      CHECK(n == 1);
    }
  }
  cfg.train.total_steps = 20'000'000;
  cfg.ppo.num_envs = 128;
  cfg.ppo.horizon = 32;
  CHECK(Trainer(cfg).total_updates() == 4882);
}

TEST_CASE("trainer: bit-reproducible and independent of thread count") {
  const fs::path a = fresh_dir("rep_a"), b = fresh_dir("rep_b"), c = fresh_dir("rep_c");
  const auto ca = Trainer(smoke_config(1)).run(a);
  const auto cb = Trainer(smoke_config(1)).run(b);
  const auto cc = Trainer(smoke_config(3)).run(c);
  CHECK(slurp(a / kTrainLogName) == slurp(b / kTrainLogName));
  CHECK(slurp(a / kTrainLogName) == slurp(c / kTrainLogName));
  const Checkpoint x = load_checkpoint(ca.back()), z = load_checkpoint(cc.back());
  CHECK(std::equal(x.model.actor.params().begin(), x.model.actor.params().end(), z.model.actor.params().begin()));
  CHECK(std::equal(x.model.critic.params().begin(), x.model.critic.params().end(), z.model.critic.params().begin()));
}

TEST_CASE("trainer: resuming continues the update count") {
  const fs::path dir = fresh_dir("resume");
  config::RunConfig cfg = smoke_config(1);
  cfg.train.total_steps = 64;  // 1 update
  const auto first = Trainer(cfg).run(dir);
  Checkpoint c = load_checkpoint(first.back());
  c.config.train.total_steps = 128;
  Trainer t(std::move(c));
  const auto more = t.run(dir);
  CHECK(t.progress().updates == 2);
  REQUIRE_FALSE(more.empty());
  const std::string log = slurp(dir / kTrainLogName);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("trainer: resume without optimizer state is refused") {
  Trainer t(smoke_config(1));
  Checkpoint c = t.checkpoint();
  c.optimizers.reset();
  CHECK_THROWS(Trainer(std::move(c)));
}
