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

#include <vector>

#include "vwl/core.hpp"

namespace vwl::testing {

/// Ego at the origin facing +y with a constant-speed history.
inline Scene cruising_scene(double speed = 5.0) {
  Scene s;
  s.ego.velocity = {0.0, speed};
  for (int k = 3; k >= 0; --k) s.ego_history.emplace_back(0.0, -k * speed * kStepSeconds);
  return s;
}

inline AgentState vehicle(std::int64_t id, Vec2 position, Vec2 velocity = Vec2::Zero()) {
  AgentState a;
  a.id = id;
  a.position = position;
  a.velocity = velocity;
  a.length = 4.0;
  a.width = 2.0;
  return a;
}

inline Trajectory straight(double speed, int n = kHorizon, double dt = kStepSeconds) {
  Trajectory t;
  t.step_s = dt;
  for (int h = 1; h <= n; ++h) t.points.emplace_back(0.0, speed * h * dt);
  return t;
}

}  // namespace vwl::testing
