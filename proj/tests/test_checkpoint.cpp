#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "forge/rl/checkpoint.hpp"

using namespace forge;
using namespace forge::rl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "forge_tests";
  fs::create_directories(dir);
  return dir / name;
}

Checkpoint sample() {
  Checkpoint c;
  c.config = config::make_preset("peg_8mm");
  c.config.policy.hidden = {8, 8};
  c.config.policy.gru_size = 4;
  c.config.seed = 9;
  c.model = ActorCritic(c.config.policy, 9);
  const float obs[21] = {1, 2, 3};
  c.model.obs_norm.update(obs, 1);
  c.optimizers.emplace(c.model);
  c.optimizers->actor.first_moment()[3] = 0.5f;
  c.optimizers->critic.set_steps(12);
  c.progress = {4096, 1, 2};
  return c;
}

}  // namespace

TEST_CASE("checkpoint: round trip preserves everything") {
  const Checkpoint c = sample();
  const fs::path p = scratch("round.bin");
  save_checkpoint(p, c);
  const Checkpoint back = load_checkpoint(p);
  CHECK(config::to_json_text(back.config) == config::to_json_text(c.config));
  CHECK(std::equal(c.model.actor.params().begin(), c.model.actor.params().end(), back.model.actor.params().begin()));
  CHECK(std::equal(c.model.critic.params().begin(), c.model.critic.params().end(), back.model.critic.params().begin()));
  CHECK(back.model.log_std == c.model.log_std);
  CHECK(back.model.obs_norm.mean() == c.model.obs_norm.mean());
  CHECK(back.model.obs_norm.count() == c.model.obs_norm.count());
  REQUIRE(back.optimizers.has_value());
  CHECK(back.optimizers->actor.first_moment()[3] == 0.5f);
  CHECK(back.optimizers->critic.steps() == 12);
  CHECK(back.progress.env_steps == 4096);
  CHECK(back.progress.episodes_per_env == 2);
}

TEST_CASE("checkpoint: rejects wrong version, bad magic and truncation") {
  const fs::path p = scratch("bad.bin");
  save_checkpoint(p, sample());
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), std::streamsize(b.size()));
  };
  std::string v = bytes;
  v[8] = char(kCheckpointVersion + 1);  // version follows the 8-byte magic
  write(v);
  CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("version"), CheckpointError);
  std::string m = bytes;
  m[0] = 'X';
  write(m);
  CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
  write(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
  write(bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(scratch("missing.bin")), CheckpointError);
}
