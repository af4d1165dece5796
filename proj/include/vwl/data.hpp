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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "vwl/core.hpp"
#include "vwl/grammar.hpp"
#include "vwl/policy.hpp"
#include "vwl/worldsim.hpp"

namespace vwl::data {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1 };

/// Agent archetypes placed around the ego.
enum class AgentRole : std::uint8_t { kLead = 0, kOncoming, kCrossing, kParked, kBehind };
inline constexpr int kNumRoles = 5;

struct ScenarioConfig {
  int n_scenes = 250;
  double val_fraction = 0.2;
  int agents_min = 1;
  int agents_max = 5;
  double ego_speed_min = 2.0;  // m/s
  double ego_speed_max = 10.0;
  /// Expert accelerates toward this speed when the road allows it.
  double cruise_speed = 7.0;
  /// Bound on the past longitudinal acceleration encoded in the history.
  double ego_accel_max = 1.0;  // m/s^2
  std::array<double, kNumLateral> goal_mix = {0.5, 0.25, 0.25};
  std::array<double, kNumRoles> role_mix = {0.3, 0.2, 0.2, 0.15, 0.15};
  /// Road edges in the ego frame; both lanes run along +y.
  double road_left_x = -5.75;
  double road_right_x = 2.25;
  double lane_width = 3.5;
  /// Regeneration attempts per scene before giving up.
  int rejection_budget = 200;
  std::uint64_t seed = 7;

  /// Throws PreconditionError naming the offending field.
  void validate() const;
  int n_val() const;
  int n_train() const { return n_scenes - n_val(); }
};

struct DatasetRecord {
  Scene scene;
  MissionGoal goal = MissionGoal::kForward;
  grammar::ShortTermPrediction gt_short;
  worldsim::OccupancyGrid gt_future_grid;
  ActionLabel gt_action;
  Trajectory gt_trajectory;
  Split split = Split::kTrain;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Profiles tried by the scripted expert, most assertive first.
struct ExpertPlan {
  Longitudinal longitudinal = Longitudinal::kKeep;
  Trajectory trajectory;
};

/// Goal-following expert: constant-acceleration profiles along the goal
/// curvature, first profile without a collision under the true world rollout.
/// Returns false when every profile collides.
bool expert_plan(const Scene& scene, MissionGoal goal, double cruise_speed, ExpertPlan& out);

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic under cfg.seed. Throws GenerationError when a scene exhausts its rejection budget.
std::vector<DatasetRecord> generate_scenarios(const ScenarioConfig& cfg, const policy::PolicyConfig& pcfg = {});

inline constexpr int kDatasetVersion = 1;

/// Malformed dataset input; `line` is 1-based.
struct DatasetParseError : IoError {
  DatasetParseError(int line, const std::string& detail, const std::string& source = "")
      : IoError((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
        line(line),
        detail(detail) {}
  int line;
  std::string detail;
};

void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(std::istream& is);
void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path);
std::vector<DatasetRecord> load_dataset(const std::string& path);

/// Ground-truth six-segment sample for imitation and reward self-checks.
grammar::StructuredSample make_gt_sample(const DatasetRecord& record, const policy::PolicyConfig& pcfg = {});

std::string_view to_string(Split s);
std::string_view to_string(AgentRole r);

}  // namespace vwl::data
