#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "forge/config/run_config.hpp"

using namespace forge;
using namespace forge::config;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: resolved JSON round-trips for every preset") {
  for (const auto& name : preset_names()) {
    RunConfig cfg = make_preset(name);
    cfg.seed = 17;
    cfg.ppo.num_envs = 64;
    const std::string text = to_json_text(cfg);
    const RunConfig back = parse_config(text);
    CHECK(to_json_text(back) == text);
    CHECK(back.seed == 17);
    CHECK(back.ppo == cfg.ppo);
    CHECK(back.env.reward.success_dist == cfg.env.reward.success_dist);
  }
}

TEST_CASE("config: absent fields keep the preset values") {
  const RunConfig cfg = parse_config(R"({
    // peg preset with a different seed
    "schema_version": 1,
    "seed": 4,
    "ppo": {"epochs": 2}
  })");
  const RunConfig peg = make_preset("peg_8mm");
  CHECK(cfg.seed == 4);
  CHECK(cfg.ppo.epochs == 2);
  CHECK(cfg.ppo.num_envs == peg.ppo.num_envs);
  CHECK(cfg.env.reward.episode_length == 150);
}

TEST_CASE("config: errors name the offending path") {
  CHECK(error_of(R"({"schema_version": 1, "ppo": {"epochz": 2}})").find("ppo.epochz") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "ppo": {"epochs": "two"}})").find("ppo.epochs") != std::string::npos);
  CHECK(error_of(R"({"seed": 1})").find("schema_version") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 2})").find("schema_version") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "preset": "bolt"})").find("bolt") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "env": {"dynamics": {"kp": [800, 400]}}})").find("kp") != std::string::npos);
  CHECK_FALSE(error_of("{not json").empty());
}

TEST_CASE("config: presets carry their task parameters") {
  const RunConfig peg = make_preset("peg_8mm");
  CHECK(peg.env.geometry.peg_radius == 0.004);
  CHECK(peg.env.geometry.clearance() == doctest::Approx(0.00025));
  CHECK(peg.env.reward.coarse.a == 50);
  CHECK(peg.env.reward.fine.a == 100);
  CHECK(peg.env.reward.contact_penalty == 0.2);
  const RunConfig gear = make_preset("gear_medium");
  CHECK(gear.env.reward.episode_length == 300);
  const RunConfig nut = make_preset("nut_m16");
  CHECK(nut.env.reward.episode_length == 450);
  CHECK_THROWS_AS(make_preset("bolt"), ConfigError);
}

TEST_CASE("shipped config files resolve to their presets") {
  for (const auto& name : preset_names()) {
    std::ifstream in(std::string(FORGE_CONFIG_DIR) + "/" + name + ".json");
    REQUIRE(in.good());
    std::stringstream text;
    text << in.rdbuf();
    const RunConfig cfg = parse_config(text.str());
    CHECK_NOTHROW(cfg.validate());
    CHECK(to_json_text(cfg) == to_json_text(make_preset(name)));
  }
}
