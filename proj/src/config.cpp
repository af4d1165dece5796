// Copyright 2026 The VLA-World Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vwl/config.hpp"

#include <charconv>
#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace vwl {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key), "cannot parse '" + std::string(v) + "' as a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

template <std::size_t N>
std::array<double, N> parse_list(std::string_view key, std::string_view v) {
  std::array<double, N> out{};
  std::size_t i = 0;
  while (true) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    if (i >= N) throw ConfigError(std::string(key), "expected " + std::to_string(N) + " comma-separated values");
    out[i++] = parse_number<double>(key, item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (i != N) throw ConfigError(std::string(key), "expected " + std::to_string(N) + " comma-separated values");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <std::size_t N>
std::string fmt(const std::array<double, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? ", " : "") + fmt(a[i]);
  return s;
}

struct Entry {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VWL_STR(key, member)                                                \
  Entry {                                                                   \
    key, [](RunConfig& c, std::string_view v) { c.member = std::string(v); }, \
        [](const RunConfig& c) { return c.member; }                         \
  }
#define VWL_NUM(key, member, type)                                                         \
  Entry {                                                                                  \
    key, [](RunConfig& c, std::string_view v) { c.member = parse_number<type>(key, v); }, \
        [](const RunConfig& c) { return fmt(static_cast<double>(c.member)); }              \
  }
#define VWL_INT(key, member, type)                                                         \
  Entry {                                                                                  \
    key, [](RunConfig& c, std::string_view v) { c.member = parse_number<type>(key, v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                        \
  }
#define VWL_LIST(key, member, n)                                                        \
  Entry {                                                                               \
    key, [](RunConfig& c, std::string_view v) { c.member = parse_list<n>(key, v); },   \
        [](const RunConfig& c) { return fmt(c.member); }                                \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      VWL_INT("seed", seed, std::uint64_t),
      VWL_STR("data_dir", data_dir),
      VWL_STR("run_dir", run_dir),

      VWL_INT("data.seed", scenario.seed, std::uint64_t),
      VWL_INT("data.n_scenes", scenario.n_scenes, int),
      VWL_NUM("data.val_fraction", scenario.val_fraction, double),
      VWL_INT("data.agents_min", scenario.agents_min, int),
      VWL_INT("data.agents_max", scenario.agents_max, int),
      VWL_NUM("data.ego_speed_min", scenario.ego_speed_min, double),
      VWL_NUM("data.ego_speed_max", scenario.ego_speed_max, double),
      VWL_NUM("data.cruise_speed", scenario.cruise_speed, double),
      VWL_NUM("data.ego_accel_max", scenario.ego_accel_max, double),
      VWL_LIST("data.goal_mix", scenario.goal_mix, 3),
      VWL_LIST("data.role_mix", scenario.role_mix, 5),
      VWL_NUM("data.road_left_x", scenario.road_left_x, double),
      VWL_NUM("data.road_right_x", scenario.road_right_x, double),
      VWL_NUM("data.lane_width", scenario.lane_width, double),
      VWL_INT("data.rejection_budget", scenario.rejection_budget, int),

      VWL_NUM("kinematics.fusion_weight", policy.kinematics.fusion_weight, double),
      VWL_NUM("kinematics.lookahead_s", policy.kinematics.lookahead_s, double),

      VWL_INT("grid.cells_per_side", policy.grid.cells_per_side, int),
      VWL_NUM("grid.extent_m", policy.grid.extent_m, double),
      VWL_INT("grid.num_classes", policy.grid.num_classes, int),

      VWL_NUM("policy.reflection_cap", policy.reflection_cap, double),
      VWL_NUM("policy.safety_margin", policy.refine.safety_margin, double),
      VWL_NUM("policy.corridor_halfwidth", policy.refine.halfwidth, double),
      VWL_INT("policy.lookahead_steps", policy.refine.lookahead_steps, int),
      Entry{"policy.perception", [](RunConfig& c, std::string_view v) { c.policy.pipeline.perception = parse_bool("policy.perception", v); },
            [](const RunConfig& c) { return std::string(c.policy.pipeline.perception ? "true" : "false"); }},
      Entry{"policy.generation", [](RunConfig& c, std::string_view v) { c.policy.pipeline.generation = parse_bool("policy.generation", v); },
            [](const RunConfig& c) { return std::string(c.policy.pipeline.generation ? "true" : "false"); }},
      Entry{"policy.reasoning", [](RunConfig& c, std::string_view v) { c.policy.pipeline.reasoning = parse_bool("policy.reasoning", v); },
            [](const RunConfig& c) { return std::string(c.policy.pipeline.reasoning ? "true" : "false"); }},

      VWL_INT("pretrain.epochs", pretrain.epochs, int),
      VWL_NUM("pretrain.learning_rate", pretrain.learning_rate, double),
      VWL_INT("pretrain.batch_size", pretrain.batch_size, int),
      VWL_INT("sft.epochs", sft.epochs, int),
      VWL_NUM("sft.learning_rate", sft.learning_rate, double),
      VWL_INT("sft.batch_size", sft.batch_size, int),

      VWL_INT("rl.steps", rl.steps, int),
      VWL_INT("rl.group_size", rl.group_size, int),
      VWL_NUM("rl.clip_eps", rl.clip_eps, double),
      VWL_NUM("rl.kl_coef", rl.kl_coef, double),
      VWL_NUM("rl.learning_rate", rl.learning_rate, double),
      VWL_NUM("rl.advantage_eps", rl.advantage_eps, double),
      VWL_INT("rl.inner_epochs", rl.inner_epochs, int),
      VWL_INT("rl.prompts_per_step", rl.prompts_per_step, int),
      VWL_INT("rl.threads", rl.threads, int),
      VWL_INT("rl.probe_size", probe_size, int),

      VWL_NUM("reward.fmt", weights.fmt, double),
      VWL_NUM("reward.pred", weights.pred, double),
      VWL_NUM("reward.vis", weights.vis, double),
      VWL_NUM("reward.act", weights.act, double),
      VWL_NUM("reward.traj", weights.traj, double),
      VWL_NUM("reward.sigma_pred", shaping.sigma_pred, double),
      VWL_NUM("reward.sigma_traj", shaping.sigma_traj, double),
      VWL_NUM("reward.sigma_jerk", shaping.sigma_jerk, double),

      VWL_INT("eval.projection_seed", projection_seed, std::uint64_t),
      VWL_INT("eval.feature_dim", feature_dim, int),
  };
  return table;
}

#undef VWL_STR
#undef VWL_NUM
#undef VWL_INT
#undef VWL_LIST

// Re-throws a sub-config precondition failure against the key that owns it.
template <typename F>
void check_section(const char* field, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  check_section("data", [&] { scenario.validate(); });
  check_section("kinematics", [&] { policy.kinematics.validate(); });
  check_section("grid", [&] { policy.grid.validate(); });
  check_section("rl", [&] { rl.validate(); });
  check_section("reward", [&] { weights.validate(); });
  if (!(policy.reflection_cap > 0.0)) throw ConfigError("policy.reflection_cap", "must be > 0");
  if (!(policy.refine.safety_margin >= 0.0)) throw ConfigError("policy.safety_margin", "must be >= 0");
  if (!(policy.refine.halfwidth > 0.0)) throw ConfigError("policy.corridor_halfwidth", "must be > 0");
  if (policy.refine.lookahead_steps < 1) throw ConfigError("policy.lookahead_steps", "must be >= 1");
  for (const auto& [name, st] : {std::pair{"pretrain", &pretrain}, std::pair{"sft", &sft}}) {
    if (st->epochs < 0) throw ConfigError(std::string(name) + ".epochs", "must be >= 0");
    if (!(st->learning_rate > 0.0)) throw ConfigError(std::string(name) + ".learning_rate", "must be > 0");
    if (st->batch_size < 1) throw ConfigError(std::string(name) + ".batch_size", "must be >= 1");
  }
  if (probe_size < 0) throw ConfigError("rl.probe_size", "must be >= 0");
  if (!(shaping.sigma_pred > 0.0)) throw ConfigError("reward.sigma_pred", "must be > 0");
  if (!(shaping.sigma_traj > 0.0)) throw ConfigError("reward.sigma_traj", "must be > 0");
  if (!(shaping.sigma_jerk > 0.0)) throw ConfigError("reward.sigma_jerk", "must be > 0");
  if (feature_dim < 1) throw ConfigError("eval.feature_dim", "must be >= 1");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  int lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = entries();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return key == e.key; });
    if (it == table.end()) throw ConfigError(key, "unknown configuration key");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    if (value.empty()) throw ConfigError(key, "missing value");
    it->set(cfg, value);
  }
  if (!seen.count("seed")) throw ConfigError("seed", "required key is missing");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.emplace_back(e.key);
  return keys;
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace vwl
