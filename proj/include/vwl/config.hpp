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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vwl/core.hpp"
#include "vwl/data.hpp"
#include "vwl/grpo.hpp"
#include "vwl/policy.hpp"
#include "vwl/rewards.hpp"

namespace vwl {

/// Invalid configuration; `field` names the offending key.
struct ConfigError : PreconditionError {
  ConfigError(std::string field, const std::string& what)
      : PreconditionError(field + ": " + what), field(std::move(field)) {}
  std::string field;
};

struct StageConfig {
  int epochs = 0;
  double learning_rate = 0.1;
  int batch_size = 16;
};

struct RunConfig {
  std::string data_dir = "data";
  std::string run_dir = "runs";
  std::uint64_t seed = 1;

  data::ScenarioConfig scenario;
  policy::PolicyConfig policy;
  StageConfig pretrain{100, 50.0, 16};
  StageConfig sft{100, 0.3, 16};
  grpo::GrpoConfig rl;
  /// Validation scenes tracked by greedy L2 during RL.
  int probe_size = 16;
  rewards::RewardWeights weights;
  rewards::RewardShaping shaping;
  std::uint64_t projection_seed = 20240917;
  int feature_dim = 64;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Parses a flat `key = value` document; `#` starts a comment, lists are comma separated.
/// Keys absent from the document keep their defaults, except `seed`, which must be present.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Every recognised key, in documentation order.
std::vector<std::string> config_keys();

/// Serialises a configuration in the format parse_config reads.
std::string format_config(const RunConfig& cfg);

}  // namespace vwl
