#include "forge/config/run_config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "forge/core/parallel.hpp"
#include "json.hpp"

namespace forge::config {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads fields out of a JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void field(const char* name, T& value);

  void finish() const {
    for (const auto& [key, unused] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(path_, key) + ": unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <class T>
  void field(const char* name, T& value);

  void finish() const {}

 private:
  json& j_;
};

template <class Ar> void visit(Ar& ar, world::TaskGeometry& g);
template <class Ar> void visit(Ar& ar, world::PhysicsParams& p);
template <class Ar> void visit(Ar& ar, randomization::DynamicsRanges& d);
template <class Ar> void visit(Ar& ar, randomization::InitialStateRanges& s);
template <class Ar> void visit(Ar& ar, randomization::NoiseConfig& n);
template <class Ar> void visit(Ar& ar, env::KernelParams& k);
template <class Ar> void visit(Ar& ar, env::RewardConfig& r);
template <class Ar> void visit(Ar& ar, env::EnvConfig& e);
template <class Ar> void visit(Ar& ar, PoseYaw& p);
template <class Ar> void visit(Ar& ar, rl::PolicyConfig& p);
template <class Ar> void visit(Ar& ar, rl::PpoConfig& p);
template <class Ar> void visit(Ar& ar, TrainSchedule& t);
template <class Ar> void visit(Ar& ar, RunConfig& c);

// Scalars and arrays.
template <class T>
void read_value(const json& j, const std::string& path, T& out) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
      out = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_unsigned()) {
          out = j.get<T>();
        } else {
          if (j.get<std::int64_t>() < 0) throw ConfigError(path + ": expected a non-negative integer");
          out = static_cast<T>(j.get<std::int64_t>());
        }
      } else {
        out = j.get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(path + ": expected a number");
      out = j.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError(path + ": expected a string");
      out = j.get<std::string>();
    } else if constexpr (std::is_same_v<T, randomization::Range>) {
      if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected [low, high]");
      read_value(j[0], path + "[0]", out.lo);
      read_value(j[1], path + "[1]", out.hi);
    } else if constexpr (std::is_same_v<T, Vec3>) {
      if (!j.is_array() || j.size() != 3) throw ConfigError(path + ": expected [x, y, z]");
      read_value(j[0], path + "[0]", out.x);
      read_value(j[1], path + "[1]", out.y);
      read_value(j[2], path + "[2]", out.z);
    } else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>>) {
      if (!j.is_array()) throw ConfigError(path + ": expected an array");
      out.resize(j.size());
      for (std::size_t i = 0; i < j.size(); ++i) read_value(j[i], path + "[" + std::to_string(i) + "]", out[i]);
    } else {
      Reader sub(j, path);
      visit(sub, out);
      sub.finish();
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
json write_value(T& v) {
  if constexpr (std::is_same_v<T, randomization::Range>) {
    return json::array({v.lo, v.hi});
  } else if constexpr (std::is_same_v<T, Vec3>) {
    return json::array({v.x, v.y, v.z});
  } else if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, std::string> ||
                       std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>>) {
    return json(v);
  } else {
    json j;
    Writer w(j);
    visit(w, v);
    return j;
  }
}

template <class T>
void Reader::field(const char* name, T& value) {
  seen_.insert(name);
  const auto it = j_.find(name);
  if (it == j_.end()) return;
  read_value(*it, join(path_, name), value);
}

template <class T>
void Writer::field(const char* name, T& value) {
  j_[name] = write_value(value);
}

template <class Ar>
void visit(Ar& ar, PoseYaw& p) {
  ar.field("x", p.x);
  ar.field("y", p.y);
  ar.field("z", p.z);
  ar.field("yaw", p.yaw);
}

template <class Ar>
void visit(Ar& ar, world::TaskGeometry& g) {
  ar.field("peg_radius", g.peg_radius);
  ar.field("peg_length", g.peg_length);
  ar.field("socket_inner_radius", g.socket_inner_radius);
  ar.field("socket_depth", g.socket_depth);
  ar.field("contact_stiffness", g.contact_stiffness);
  ar.field("contact_damping", g.contact_damping);
  ar.field("friction_reg_velocity", g.friction_reg_velocity);
}

template <class Ar>
void visit(Ar& ar, world::PhysicsParams& p) {
  ar.field("mass", p.mass);
  ar.field("yaw_inertia", p.yaw_inertia);
  ar.field("linear_damping", p.linear_damping);
  ar.field("yaw_damping", p.yaw_damping);
  ar.field("max_contact_dt", p.max_contact_dt);
  ar.field("max_abs_position", p.max_abs_position);
  ar.field("max_abs_velocity", p.max_abs_velocity);
}

template <class Ar>
void visit(Ar& ar, randomization::DynamicsRanges& d) {
  ar.field("kp", d.kp);
  ar.field("action_scale", d.action_scale);
  ar.field("dead_zone", d.dead_zone);
  ar.field("part_friction", d.part_friction);
  ar.field("force_threshold", d.force_threshold);
}

template <class Ar>
void visit(Ar& ar, randomization::InitialStateRanges& s) {
  ar.field("fixed_x", s.fixed_x);
  ar.field("fixed_y", s.fixed_y);
  ar.field("fixed_z", s.fixed_z);
  ar.field("hand_x", s.hand_x);
  ar.field("hand_y", s.hand_y);
  ar.field("hand_z", s.hand_z);
  ar.field("hand_yaw", s.hand_yaw);
  ar.field("held_x", s.held_x);
  ar.field("held_y", s.held_y);
  ar.field("held_z", s.held_z);
}

template <class Ar>
void visit(Ar& ar, randomization::NoiseConfig& n) {
  ar.field("fixed_pose_sigma", n.fixed_pose_sigma);
  ar.field("force_sigma", n.force_sigma);
  ar.field("ee_pos_sigma", n.ee_pos_sigma);
  ar.field("ee_yaw_sigma", n.ee_yaw_sigma);
}

template <class Ar>
void visit(Ar& ar, env::KernelParams& k) {
  ar.field("a", k.a);
  ar.field("b", k.b);
}

template <class Ar>
void visit(Ar& ar, env::RewardConfig& r) {
  ar.field("coarse", r.coarse);
  ar.field("fine", r.fine);
  ar.field("contact_penalty", r.contact_penalty);
  ar.field("success_dist", r.success_dist);
  ar.field("place_dist", r.place_dist);
  ar.field("lateral_tolerance", r.lateral_tolerance);
  ar.field("place_bonus", r.place_bonus);
  ar.field("success_bonus", r.success_bonus);
  ar.field("episode_length", r.episode_length);
  ar.field("keypoint_heights", r.keypoint_heights);
}

template <class Ar>
void visit(Ar& ar, env::EnvConfig& e) {
  ar.field("geometry", e.geometry);
  ar.field("physics", e.physics);
  ar.field("position_bound", e.limits.position_bound);
  ar.field("yaw_bound", e.limits.yaw_bound);
  ar.field("yaw_step_clip", e.limits.yaw_step_clip);
  ar.field("yaw_gain_ratio", e.yaw_gain_ratio);
  ar.field("physics_dt", e.physics_dt);
  ar.field("decimation", e.decimation);
  ar.field("dynamics", e.dynamics);
  ar.field("initial_state", e.initial_state);
  ar.field("noise", e.noise);
  ar.field("reward", e.reward);
}

template <class Ar>
void visit(Ar& ar, rl::PolicyConfig& p) {
  ar.field("hidden", p.hidden);
  ar.field("gru_size", p.gru_size);
  ar.field("init_log_std", p.init_log_std);
  ar.field("head_gain", p.head_gain);
}

template <class Ar>
void visit(Ar& ar, rl::PpoConfig& p) {
  ar.field("num_envs", p.num_envs);
  ar.field("horizon", p.horizon);
  ar.field("epochs", p.epochs);
  ar.field("minibatches", p.minibatches);
  ar.field("clip", p.clip);
  ar.field("entropy_coef", p.entropy_coef);
  ar.field("termination_entropy_coef", p.termination_entropy_coef);
  ar.field("value_coef", p.value_coef);
  ar.field("gamma", p.gamma);
  ar.field("gae_lambda", p.gae_lambda);
  ar.field("learning_rate", p.learning_rate);
  ar.field("lr_decay", p.lr_decay);
  ar.field("max_grad_norm", p.max_grad_norm);
}

template <class Ar>
void visit(Ar& ar, TrainSchedule& t) {
  ar.field("total_steps", t.total_steps);
  ar.field("checkpoint_interval", t.checkpoint_interval);
  ar.field("log_interval", t.log_interval);
  ar.field("selection_checkpoints", t.selection_checkpoints);
  ar.field("selection_episodes", t.selection_episodes);
}

template <class Ar>
void visit(Ar& ar, RunConfig& c) {
  ar.field("schema_version", c.schema_version);
  ar.field("preset", c.preset);
  ar.field("seed", c.seed);
  ar.field("threads", c.threads);
  ar.field("env", c.env);
  ar.field("policy", c.policy);
  ar.field("ppo", c.ppo);
  ar.field("train", c.train);
}

// Wraps std::invalid_argument from the module validators.
template <class F>
void check(const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " +
                      std::to_string(schema_version));
  if (threads < 0) throw ConfigError("threads: must be >= 0");
  check("env", [&] { env.validate(); });
  check("policy", [&] { policy.validate(); });
  check("ppo", [&] { ppo.validate(); });
  if (train.total_steps <= 0) throw ConfigError("train.total_steps: must be positive");
  if (train.checkpoint_interval <= 0) throw ConfigError("train.checkpoint_interval: must be positive");
  if (train.log_interval <= 0) throw ConfigError("train.log_interval: must be positive");
  if (train.selection_checkpoints <= 0) throw ConfigError("train.selection_checkpoints: must be positive");
  if (train.selection_episodes <= 0) throw ConfigError("train.selection_episodes: must be positive");
}

int RunConfig::resolved_threads() const { return threads > 0 ? threads : WorkerPool::default_threads(); }

std::vector<std::string> preset_names() { return {"peg_8mm", "gear_medium", "nut_m16"}; }

RunConfig make_preset(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  auto& e = c.env;
  if (name == "peg_8mm") return c;
  constexpr double kDeg = std::numbers::pi / 180.0;
  if (name == "gear_medium") {
    // gear bore over a round shaft: 0.5 mm diametral clearance, 20 mm engagement
    e.geometry.peg_radius = 0.004;
    e.geometry.socket_inner_radius = 0.00425;
    e.geometry.socket_depth = 0.020;
    e.initial_state.hand_z = {0.025, 0.045};
    e.initial_state.held_z = {0.012, 0.015};
    e.dynamics.part_friction = {0.38, 0.75};
    e.reward.contact_penalty = 0.05;
    e.reward.success_dist = 0.019;
    e.reward.place_dist = 0.002;
    e.reward.episode_length = 300;
    return c;
  }
  if (name == "nut_m16") {
    // threading approximated by a shallow 8 mm bore with low friction
    e.geometry.socket_depth = 0.0035;
    e.initial_state.hand_z = {0.005, 0.025};
    e.initial_state.hand_yaw = {-120.0 * kDeg, -90.0 * kDeg};
    e.initial_state.held_z = {0.010, 0.016};
    e.dynamics.part_friction = {0.1, 0.38};
    e.reward.coarse = {100.0, 2.0};
    e.reward.fine = {500.0, 0.0};
    e.reward.contact_penalty = 0.05;
    e.reward.success_dist = 0.0025;
    e.reward.place_dist = 0.0025;
    e.reward.episode_length = 450;
    return c;
  }
  throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<root>: expected an object");
  RunConfig cfg;
  if (const auto it = j.find("preset"); it != j.end()) {
    std::string name;
    read_value(*it, "preset", name);
    cfg = make_preset(name);
  }
  if (const auto it = j.find("schema_version"); it == j.end()) {
    throw ConfigError("schema_version: missing");
  }
  Reader r(j, "");
  visit(r, cfg);
  r.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json_text(const RunConfig& cfg) {
  RunConfig copy = cfg;
  json j;
  Writer w(j);
  visit(w, copy);
  return j.dump(2) + "\n";
}

}  // namespace forge::config
