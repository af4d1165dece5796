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

#include <gtest/gtest.h>

namespace vwl {
namespace {

std::string field_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

TEST(Config, MinimalDocumentKeepsDefaults) {
  const RunConfig c = parse_config("seed = 3\n");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.scenario.n_scenes, 250);
  EXPECT_EQ(c.scenario.seed, 7u);
  EXPECT_EQ(c.rl.group_size, 8);
  EXPECT_DOUBLE_EQ(c.policy.kinematics.fusion_weight, 0.5);
}

TEST(Config, ParsesValuesCommentsAndLists) {
  const RunConfig c = parse_config(
      "# comment line\n"
      "seed = 11   # trailing comment\n"
      "data_dir = /tmp/some dir\n"
      "data.goal_mix = 0.2, 0.4, 0.4\n"
      "policy.reasoning = false\n"
      "rl.clip_eps = 0.1\n"
      "\n");
  EXPECT_EQ(c.data_dir, "/tmp/some dir");
  EXPECT_EQ(c.scenario.goal_mix, (std::array<double, 3>{0.2, 0.4, 0.4}));
  EXPECT_FALSE(c.policy.pipeline.reasoning);
  EXPECT_DOUBLE_EQ(c.rl.clip_eps, 0.1);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("rl.steps = 10\n"), "seed");
  EXPECT_EQ(field_of("seed = 1\nrl.stepz = 10\n"), "rl.stepz");
  EXPECT_EQ(field_of("seed = 1\nseed = 2\n"), "seed");
  EXPECT_EQ(field_of("seed = 1\nrl.steps = ten\n"), "rl.steps");
  EXPECT_EQ(field_of("seed = 1\nrl.clip_eps = 1.5\n"), "rl");
  EXPECT_EQ(field_of("seed = 1\nsft.learning_rate = 0\n"), "sft.learning_rate");
  EXPECT_EQ(field_of("seed = 1\ndata.goal_mix = 0.5, 0.5\n"), "data.goal_mix");
  EXPECT_EQ(field_of("seed = 1\npolicy.generation = maybe\n"), "policy.generation");
  EXPECT_EQ(field_of("seed = 1\nno equals sign\n"), "line 2");
  EXPECT_EQ(field_of("seed =\n"), "seed");
  EXPECT_THROW(load_config("/nonexistent/run.conf"), IoError);
}

TEST(Config, FormatParseRoundTrip) {
  RunConfig c = parse_config("seed = 5\n");
  c.rl.steps = 17;
  c.sft.learning_rate = 0.123456789;
  c.weights.traj = 3.25;
  c.policy.pipeline.generation = false;
  c.scenario.role_mix = {0.1, 0.2, 0.3, 0.2, 0.2};
  const std::string text = format_config(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  EXPECT_EQ(back.rl.steps, 17);
  EXPECT_EQ(back.sft.learning_rate, 0.123456789);
  EXPECT_FALSE(back.policy.pipeline.generation);
  EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const RunConfig shipped = load_config(VWL_SOURCE_DIR "/configs/default.conf");
  EXPECT_EQ(format_config(shipped), format_config(parse_config("seed = 1\n")));
}

}  // namespace
}  // namespace vwl
