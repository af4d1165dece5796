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

#include "vwl/kinematics.hpp"

#include <algorithm>
#include <numbers>

namespace vwl::kinematics {

void FusionConfig::validate() const {
  require(fusion_weight >= 0.0 && fusion_weight <= 1.0, "fusion_weight must lie in [0, 1]");
  require(lookahead_s > 0.0, "lookahead_s must be positive");
}

Vec2 FusionConfig::ideal_displacement(MissionGoal goal, const Vec2& velocity) const {
  const GoalOffset& g = goal_offsets[static_cast<std::size_t>(goal)];
  return std::max(velocity.norm(), g.min_speed) * lookahead_s * g.direction;
}

KinematicState estimate_state(std::span<const Vec2> history, double dt) {
  require(history.size() >= 3, "estimate_state needs at least 3 history points");
  require(dt > 0.0, "estimate_state needs dt > 0");
  const std::size_t n = history.size();
  const Vec2& p0 = history[n - 3];
  const Vec2& p1 = history[n - 2];
  const Vec2& p2 = history[n - 1];
  const Vec2 v_prev = (p1 - p0) / dt;
  KinematicState s;
  s.velocity = (p2 - p1) / dt;
  s.inertial_accel = (s.velocity - v_prev) / dt;
  return s;
}

Vec2 goal_acceleration(const KinematicState& state, const Vec2& ideal_disp, double lookahead_s) {
  require(lookahead_s > 0.0, "goal_acceleration needs lookahead_s > 0");
  return (2.0 / (lookahead_s * lookahead_s)) * (ideal_disp - state.velocity * lookahead_s);
}

Vec2 fuse_acceleration(const Vec2& a_hist, const Vec2& a_goal, double weight) {
  require(weight >= 0.0 && weight <= 1.0, "fusion weight must lie in [0, 1]");
  return (1.0 - weight) * a_hist + weight * a_goal;
}

Vec2 predict_short(const Vec2& p_t, const KinematicState& state, const Vec2& a_eff, double lookahead_s) {
  require(lookahead_s > 0.0, "predict_short needs lookahead_s > 0");
  return p_t + state.velocity * lookahead_s + 0.5 * a_eff * lookahead_s * lookahead_s;
}

ShortPrediction predict(std::span<const Vec2> history, MissionGoal goal, const FusionConfig& cfg, double dt) {
  cfg.validate();
  const KinematicState state = estimate_state(history, dt);
  const double tau = cfg.lookahead_s;
  const Vec2 a_goal = goal_acceleration(state, cfg.ideal_displacement(goal, state.velocity), tau);
  const Vec2 a_eff = fuse_acceleration(state.inertial_accel, a_goal, cfg.fusion_weight);
  ShortPrediction out;
  out.waypoint = predict_short(history.back(), state, a_eff, tau);
  out.velocity = state.velocity + a_eff * tau;
  out.direction = heading_label(out.velocity);
  return out;
}

double bearing(const Vec2& v) { return std::atan2(-v.x(), v.y()); }

Direction heading_label(const Vec2& v, double threshold_deg) {
  if (v.x() == 0.0 && v.y() == 0.0) return Direction::kForward;
  const double b = bearing(v) * 180.0 / std::numbers::pi;
  if (b > threshold_deg) return Direction::kLeft;
  if (b < -threshold_deg) return Direction::kRight;
  return Direction::kForward;
}

std::vector<double> jerk_profile(const Trajectory& traj, const Vec2& v0, const Vec2& a0) {
  require(traj.points.size() >= 3, "jerk_profile needs at least 3 waypoints");
  require(traj.step_s > 0.0, "jerk_profile needs a positive step");
  const double dt = traj.step_s;
  std::vector<double> jerk;
  jerk.reserve(traj.points.size());
  Vec2 prev_p = Vec2::Zero();
  Vec2 prev_v = v0;
  Vec2 prev_a = a0;
  for (const Vec2& p : traj.points) {
    const Vec2 v = (p - prev_p) / dt;
    const Vec2 a = (v - prev_v) / dt;
    jerk.push_back((a - prev_a).norm() / dt);
    prev_p = p;
    prev_v = v;
    prev_a = a;
  }
  return jerk;
}

}  // namespace vwl::kinematics
