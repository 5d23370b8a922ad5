#include "forge/rl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace forge::rl {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'F', 'O', 'R', 'G', 'E', 'C', 'K', 'P'};

json spec_json(const nn::NetworkSpec& s) {
  return {{"input_dim", s.input_dim}, {"hidden", s.hidden}, {"gru_size", s.gru_size}, {"output_dim", s.output_dim}};
}

json norm_json(const nn::RunningMeanStd& n) { return {{"mean", n.mean()}, {"var", n.var()}, {"count", n.count()}}; }

void read_norm(const json& j, nn::RunningMeanStd& n, const char* name) {
  auto mean = j.at("mean").get<std::vector<double>>();
  auto var = j.at("var").get<std::vector<double>>();
  if (mean.size() != n.dim() || var.size() != n.dim())
    throw CheckpointError(std::string("checkpoint: normalizer '") + name + "' has the wrong dimension");
  n.mean() = std::move(mean);
  n.var() = std::move(var);
  n.set_count(j.at("count").get<double>());
}

struct Array {
  const char* name;
  float* data;
  std::size_t count;
};

std::vector<Array> arrays(Checkpoint& c) {
  std::vector<Array> out = {
      {"actor", c.model.actor.params().data(), c.model.actor.params().size()},
      {"critic", c.model.critic.params().data(), c.model.critic.params().size()},
      {"log_std", c.model.log_std.data(), c.model.log_std.size()},
  };
  if (c.optimizers) {
    auto& o = *c.optimizers;
    out.push_back({"adam_actor_m", o.actor.first_moment().data(), o.actor.first_moment().size()});
    out.push_back({"adam_actor_v", o.actor.second_moment().data(), o.actor.second_moment().size()});
    out.push_back({"adam_critic_m", o.critic.first_moment().data(), o.critic.first_moment().size()});
    out.push_back({"adam_critic_v", o.critic.second_moment().data(), o.critic.second_moment().size()});
    out.push_back({"adam_log_std_m", o.log_std.first_moment().data(), o.log_std.first_moment().size()});
    out.push_back({"adam_log_std_v", o.log_std.second_moment().data(), o.log_std.second_moment().size()});
  }
  return out;
}

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Checkpoint& c = const_cast<Checkpoint&>(ckpt);  // arrays() only reads through the pointers here
  json header;
  header["config"] = json::parse(config::to_json_text(c.config));
  header["actor_spec"] = spec_json(c.model.actor.spec());
  header["critic_spec"] = spec_json(c.model.critic.spec());
  header["normalizers"] = {{"observation", norm_json(c.model.obs_norm)},
                           {"privileged", norm_json(c.model.priv_norm)},
                           {"value", norm_json(c.model.value_norm)}};
  header["progress"] = {{"env_steps", c.progress.env_steps},
                        {"updates", c.progress.updates},
                        {"episodes_per_env", c.progress.episodes_per_env}};
  if (c.optimizers) {
    header["adam_steps"] = {{"actor", c.optimizers->actor.steps()},
                            {"critic", c.optimizers->critic.steps()},
                            {"log_std", c.optimizers->log_std.steps()}};
  }
  json list = json::array();
  for (const auto& a : arrays(c)) list.push_back({{"name", a.name}, {"count", a.count}});
  header["arrays"] = list;
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kCheckpointVersion);
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : arrays(c)) {
      out.write(reinterpret_cast<const char*>(a.data), static_cast<std::streamsize>(a.count * sizeof(float)));
    }
    if (!out) throw CheckpointError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("checkpoint: " + path.string() + " is not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto len = get<std::uint64_t>(in);
  if (len > (1u << 26)) throw CheckpointError("checkpoint: header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("checkpoint: truncated header");

  Checkpoint c;
  try {
    const json header = json::parse(text);
    c.config = config::parse_config(header.at("config").dump());
    c.model = ActorCritic(c.config.policy, 0);
    const auto check_spec = [&](const json& j, const nn::NetworkSpec& s, const char* name) {
      if (j != spec_json(s)) throw CheckpointError(std::string("checkpoint: ") + name + " spec does not match config");
    };
    check_spec(header.at("actor_spec"), c.model.actor.spec(), "actor");
    check_spec(header.at("critic_spec"), c.model.critic.spec(), "critic");
    const auto& norms = header.at("normalizers");
    read_norm(norms.at("observation"), c.model.obs_norm, "observation");
    read_norm(norms.at("privileged"), c.model.priv_norm, "privileged");
    read_norm(norms.at("value"), c.model.value_norm, "value");
    const auto& prog = header.at("progress");
    c.progress = {prog.at("env_steps").get<std::int64_t>(), prog.at("updates").get<std::int64_t>(),
                  prog.at("episodes_per_env").get<std::int64_t>()};
    if (header.contains("adam_steps")) {
      c.optimizers.emplace(c.model);
      const auto& s = header.at("adam_steps");
      c.optimizers->actor.set_steps(s.at("actor").get<std::int64_t>());
      c.optimizers->critic.set_steps(s.at("critic").get<std::int64_t>());
      c.optimizers->log_std.set_steps(s.at("log_std").get<std::int64_t>());
    }
    const auto expected = arrays(c);
    const auto& list = header.at("arrays");
    if (list.size() != expected.size()) throw CheckpointError("checkpoint: unexpected array list");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (list[i].at("name").get<std::string>() != expected[i].name ||
          list[i].at("count").get<std::size_t>() != expected[i].count)
        throw CheckpointError(std::string("checkpoint: array '") + expected[i].name + "' does not match");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const config::ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: embedded config invalid: ") + e.what());
  }
  for (const auto& a : arrays(c)) {
    in.read(reinterpret_cast<char*>(a.data), static_cast<std::streamsize>(a.count * sizeof(float)));
    if (!in) throw CheckpointError("checkpoint: truncated array data");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return c;
}

}  // namespace forge::rl
