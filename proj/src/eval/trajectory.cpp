#include "forge/eval/trajectory.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "forge/world/world.hpp"
#include "json.hpp"

namespace forge::eval {

using nlohmann::json;

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrajectoryError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016" PRIx64, h);
  return out;
}

Trajectory record_trajectory(const rl::ActorCritic& model, const env::EnvConfig& env_cfg, std::uint64_t seed,
                             std::uint64_t episode, const env::EpisodeOptions& options, std::optional<double> p_term) {
  Trajectory t;
  t.seed = seed;
  t.episode = episode;
  t.options = options;
  t.p_term = p_term;
  env::PegInsertionEnv env(env_cfg);
  rl::DeterministicPolicy policy(model);
  env::Observation obs = env.reset(seed, episode, options);
  for (int i = 0; i < env_cfg.reward.episode_length; ++i) {
    TrajectoryStep s;
    s.observation = obs.to_vector();
    const env::Action a = policy.act(obs);
    for (int k = 0; k < 4; ++k) s.action[k] = a.pose[k];
    s.action[4] = a.termination;
    env::StepResult r;
    try {
      r = env.step(a);
    } catch (const world::DivergenceError&) {
      break;
    }
    s.ee_pose = env.sim_state().ee_pose;
    s.ee_twist = env.sim_state().ee_twist;
    s.held_pose = env.sim_state().held_pose;
    s.reward = r.reward;
    s.peak_force = r.info.peak_force;
    s.success = r.info.success;
    t.steps.push_back(s);
    obs = r.observation;
    if (p_term && a.termination > *p_term) break;
  }
  return t;
}

namespace {

std::vector<double> flatten(const TrajectoryStep& s) {
  std::vector<double> v(s.observation.begin(), s.observation.end());
  v.insert(v.end(), s.action.begin(), s.action.end());
  for (double x : {s.ee_pose.x, s.ee_pose.y, s.ee_pose.z, s.ee_pose.yaw, s.ee_twist.vx, s.ee_twist.vy, s.ee_twist.vz,
                   s.ee_twist.wyaw, s.held_pose.x, s.held_pose.y, s.held_pose.z, s.held_pose.yaw, s.reward,
                   s.peak_force, s.success ? 1.0 : 0.0})
    v.push_back(x);
  return v;
}

constexpr std::size_t kValuesPerStep = env::Observation::kSize + 5 + 12 + 3;

TrajectoryStep unflatten(const std::vector<double>& v) {
  TrajectoryStep s;
  std::size_t i = 0;
  for (auto& x : s.observation) x = v[i++];
  for (auto& x : s.action) x = v[i++];
  s.ee_pose = {v[i], v[i + 1], v[i + 2], v[i + 3]};
  i += 4;
  s.ee_twist = {v[i], v[i + 1], v[i + 2], v[i + 3]};
  i += 4;
  s.held_pose = {v[i], v[i + 1], v[i + 2], v[i + 3]};
  i += 4;
  s.reward = v[i++];
  s.peak_force = v[i++];
  s.success = v[i++] != 0.0;
  return s;
}

json options_json(const env::EpisodeOptions& o) {
  json j;
  j["pose_error_mode"] = o.pose_error_mode == env::PoseErrorMode::kRing ? "ring" : "gaussian";
  j["ring_min"] = o.ring_min;
  j["ring_max"] = o.ring_max;
  j["kp_override"] = o.kp_override ? json(*o.kp_override) : json(nullptr);
  j["force_threshold_override"] = o.force_threshold_override ? json(*o.force_threshold_override) : json(nullptr);
  return j;
}

env::EpisodeOptions options_from(const json& j) {
  env::EpisodeOptions o;
  const auto mode = j.at("pose_error_mode").get<std::string>();
  if (mode != "ring" && mode != "gaussian") throw TrajectoryError("trajectory: unknown pose_error_mode");
  o.pose_error_mode = mode == "ring" ? env::PoseErrorMode::kRing : env::PoseErrorMode::kGaussian;
  o.ring_min = j.at("ring_min").get<double>();
  o.ring_max = j.at("ring_max").get<double>();
  if (!j.at("kp_override").is_null()) o.kp_override = j.at("kp_override").get<double>();
  if (!j.at("force_threshold_override").is_null())
    o.force_threshold_override = j.at("force_threshold_override").get<double>();
  return o;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

void write_trajectory(const std::filesystem::path& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TrajectoryError("cannot write " + path.string());
  json h;
  h["format"] = "forge-trajectory";
  h["version"] = kTrajectoryVersion;
  h["checkpoint"] = t.checkpoint;
  h["checkpoint_digest"] = t.checkpoint_digest;
  h["seed"] = t.seed;
  h["episode"] = t.episode;
  h["options"] = options_json(t.options);
  h["p_term"] = t.p_term ? json(*t.p_term) : json(nullptr);
  h["steps"] = t.steps.size();
  out << h.dump() << '\n';
  char buf[64];
  for (const auto& s : t.steps) {
    bool first = true;
    for (double v : flatten(s)) {
      std::snprintf(buf, sizeof(buf), "%a", v);
      out << (first ? "" : " ") << buf;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw TrajectoryError("write failed for " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrajectoryError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw TrajectoryError("trajectory: empty file");
  Trajectory t;
  std::size_t steps = 0;
  try {
    const json h = json::parse(line);
    if (h.at("format").get<std::string>() != "forge-trajectory") throw TrajectoryError("trajectory: wrong format tag");
    if (h.at("version").get<int>() != kTrajectoryVersion) throw TrajectoryError("trajectory: unsupported version");
    t.checkpoint = h.at("checkpoint").get<std::string>();
    t.checkpoint_digest = h.at("checkpoint_digest").get<std::string>();
    t.seed = h.at("seed").get<std::uint64_t>();
    t.episode = h.at("episode").get<std::uint64_t>();
    t.options = options_from(h.at("options"));
    if (!h.at("p_term").is_null()) t.p_term = h.at("p_term").get<double>();
    steps = h.at("steps").get<std::size_t>();
  } catch (const json::exception& e) {
    throw TrajectoryError(std::string("trajectory: malformed header: ") + e.what());
  }
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    v.clear();
    const char* p = line.c_str();
    char* end = nullptr;
    for (;;) {
      while (*p == ' ') ++p;
      if (*p == '\0') break;
      const double x = std::strtod(p, &end);
      if (end == p) throw TrajectoryError("trajectory: bad number on step line " + std::to_string(t.steps.size() + 1));
      v.push_back(x);
      p = end;
    }
    if (v.size() != kValuesPerStep)
      throw TrajectoryError("trajectory: step line " + std::to_string(t.steps.size() + 1) + " has " +
                            std::to_string(v.size()) + " values, expected " + std::to_string(kValuesPerStep));
    t.steps.push_back(unflatten(v));
  }
  if (t.steps.size() != steps) throw TrajectoryError("trajectory: step count does not match the header");
  return t;
}

ReplayReport replay(const Trajectory& recorded, const rl::ActorCritic& model, const env::EnvConfig& env_cfg) {
  const Trajectory again =
      record_trajectory(model, env_cfg, recorded.seed, recorded.episode, recorded.options, recorded.p_term);
  ReplayReport rep;
  const std::size_t n = std::min(again.steps.size(), recorded.steps.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = flatten(recorded.steps[i]);
    const auto b = flatten(again.steps[i]);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!same_bits(a[k], b[k])) {
        rep.first_mismatch_step = static_cast<int>(i) + 1;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "step %zu value %zu: recorded %a, replayed %a", i + 1, k, a[k], b[k]);
        rep.detail = buf;
        return rep;
      }
    }
  }
  if (again.steps.size() != recorded.steps.size()) {
    rep.first_mismatch_step = static_cast<int>(n) + 1;
    rep.detail = "episode length differs: recorded " + std::to_string(recorded.steps.size()) + ", replayed " +
                 std::to_string(again.steps.size());
    return rep;
  }
  rep.match = true;
  return rep;
}

}  // namespace forge::eval
