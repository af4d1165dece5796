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

#include "vwl/core.hpp"

#include <array>
#include <sstream>

namespace vwl {
namespace {

constexpr std::array<std::string_view, 3> kLateralNames = {"forward", "left", "right"};
constexpr std::array<std::string_view, 4> kLongitudinalNames = {"keep", "accelerate", "decelerate", "stop"};
constexpr std::array<std::string_view, 2> kAgentKindNames = {"vehicle", "pedestrian"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Lateral v) { return kLateralNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Longitudinal v) { return kLongitudinalNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(AgentKind k) { return kAgentKindNames[static_cast<std::size_t>(k)]; }

std::optional<Lateral> parse_lateral(std::string_view s) { return lookup<Lateral>(kLateralNames, s); }
std::optional<Longitudinal> parse_longitudinal(std::string_view s) {
  return lookup<Longitudinal>(kLongitudinalNames, s);
}
std::optional<AgentKind> parse_agent_kind(std::string_view s) { return lookup<AgentKind>(kAgentKindNames, s); }

void validate_trajectory(const Trajectory& t) {
  require(!t.points.empty(), "trajectory must contain at least one point");
  require(t.step_s > 0.0, "trajectory step must be positive");
}

ValidationReport validate_scene(const Scene& scene) {
  ValidationReport report;
  auto issue = [&](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    report.issues.push_back(os.str());
  };

  if (!std::isfinite(scene.timestamp)) issue("non-finite timestamp");
  const EgoState& ego = scene.ego;
  if (!finite(ego.position) || !finite(ego.velocity) || !finite(ego.acceleration) || !std::isfinite(ego.heading)) {
    issue("non-finite ego state");
  } else if (ego.heading < -std::numbers::pi || ego.heading >= std::numbers::pi) {
    issue("ego heading outside [-pi, pi)");
  }

  if (scene.ego_history.size() < 3) issue("history too short (", scene.ego_history.size(), " < 3)");
  for (std::size_t i = 0; i < scene.ego_history.size(); ++i) {
    if (!finite(scene.ego_history[i])) issue("non-finite history point ", i);
  }

  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const AgentState& a = scene.agents[i];
    if (!(a.length > 0.0) || !(a.width > 0.0)) issue("agent ", a.id, ": non-positive footprint");
    if (!finite(a.position) || !finite(a.velocity) || !std::isfinite(a.heading) || !std::isfinite(a.yaw_rate)) {
      issue("agent ", a.id, ": non-finite state");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (scene.agents[j].id == a.id) issue("duplicate agent id ", a.id);
    }
  }
  for (std::size_t i = 0; i < scene.boundaries.size(); ++i) {
    if (!finite(scene.boundaries[i].a) || !finite(scene.boundaries[i].b)) issue("non-finite boundary ", i);
  }
  return report;
}

}  // namespace vwl
