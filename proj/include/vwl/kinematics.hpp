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
#include <span>
#include <vector>

#include "vwl/core.hpp"

namespace vwl::kinematics {

struct KinematicState {
  Vec2 velocity = Vec2::Zero();
  Vec2 inertial_accel = Vec2::Zero();
};

/// Ideal displacement for one mission command: max(speed, min_speed) * tau * direction.
struct GoalOffset {
  Vec2 direction = Vec2(0.0, 1.0);
  double min_speed = 0.0;
};

struct FusionConfig {
  double fusion_weight = 0.5;
  double lookahead_s = kStepSeconds;
  std::array<GoalOffset, kNumLateral> goal_offsets = {
      GoalOffset{Vec2(0.0, 1.0), 1.0},     // forward
      GoalOffset{Vec2(-0.25, 0.97), 0.0},  // left
      GoalOffset{Vec2(0.25, 0.97), 0.0},   // right
  };

  /// Throws PreconditionError on an out-of-range weight or non-positive lookahead.
  void validate() const;
  Vec2 ideal_displacement(MissionGoal goal, const Vec2& velocity) const;
};

/// Finite-difference velocity and acceleration from the last three history points.
KinematicState estimate_state(std::span<const Vec2> history, double dt);

/// Constant acceleration that carries the current velocity onto `ideal_disp` within `lookahead_s`.
Vec2 goal_acceleration(const KinematicState& state, const Vec2& ideal_disp, double lookahead_s);

Vec2 fuse_acceleration(const Vec2& a_hist, const Vec2& a_goal, double weight);

Vec2 predict_short(const Vec2& p_t, const KinematicState& state, const Vec2& a_eff, double lookahead_s);

struct ShortPrediction {
  Vec2 waypoint = Vec2::Zero();
  /// Velocity at the end of the lookahead under a_eff.
  Vec2 velocity = Vec2::Zero();
  Direction direction = Direction::kForward;
};

/// Full short-term predictor: state estimate, goal fusion, kinematic extrapolation.
ShortPrediction predict(std::span<const Vec2> history, MissionGoal goal, const FusionConfig& cfg,
                        double dt = kStepSeconds);

inline constexpr double kDefaultHeadingThresholdDeg = 10.0;

/// Bearing of `v` relative to +y in radians, positive to the left.
double bearing(const Vec2& v);

/// forward / left / right from the bearing of `v`; the zero vector reads forward.
Direction heading_label(const Vec2& v, double threshold_deg = kDefaultHeadingThresholdDeg);

/// Per-step jerk magnitudes (m/s^3) reconstructed by finite differences from
/// the origin through the waypoints, seeded with the current v0 and a0.
std::vector<double> jerk_profile(const Trajectory& traj, const Vec2& v0, const Vec2& a0);

}  // namespace vwl::kinematics
