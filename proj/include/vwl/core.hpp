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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace vwl {

/// Ego-centric BEV point or vector: +x right, +y forward, metres.
using Vec2 = Eigen::Vector2d;

/// Fixed planning step shared by every module.
inline constexpr double kStepSeconds = 0.5;
/// Planning horizon in steps (3 s at 0.5 s).
inline constexpr int kHorizon = 6;
/// Heading of the ego in its own frame (facing +y).
inline constexpr double kForwardHeading = std::numbers::pi / 2.0;

// Errors. Precondition violations are programming or input errors; the CLI
// maps each family onto its own exit code.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

/// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  return r - std::numbers::pi;
}

inline bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

/// Rotates a vector counter-clockwise by `angle` radians.
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

enum class Lateral : std::uint8_t { kForward = 0, kLeft = 1, kRight = 2 };
enum class Longitudinal : std::uint8_t { kKeep = 0, kAccelerate = 1, kDecelerate = 2, kStop = 3 };

inline constexpr int kNumLateral = 3;
inline constexpr int kNumLongitudinal = 4;

/// Mission goal shares the lateral vocabulary.
using MissionGoal = Lateral;
/// Driving direction of the short-term prediction.
using Direction = Lateral;

std::string_view to_string(Lateral v);
std::string_view to_string(Longitudinal v);
std::optional<Lateral> parse_lateral(std::string_view s);
std::optional<Longitudinal> parse_longitudinal(std::string_view s);

struct ActionLabel {
  Lateral lateral = Lateral::kForward;
  Longitudinal longitudinal = Longitudinal::kKeep;

  /// Joint index in [0, 12): lateral-major.
  int index() const { return static_cast<int>(lateral) * kNumLongitudinal + static_cast<int>(longitudinal); }
  static ActionLabel from_index(int i) {
    return {static_cast<Lateral>(i / kNumLongitudinal), static_cast<Longitudinal>(i % kNumLongitudinal)};
  }
  friend bool operator==(const ActionLabel&, const ActionLabel&) = default;
};

inline constexpr int kNumActions = kNumLateral * kNumLongitudinal;

struct EgoState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
  double heading = kForwardHeading;
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

enum class AgentKind : std::uint8_t { kVehicle = 0, kPedestrian = 1 };
std::string_view to_string(AgentKind k);
std::optional<AgentKind> parse_agent_kind(std::string_view s);

struct AgentState {
  std::int64_t id = 0;
  AgentKind kind = AgentKind::kVehicle;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double heading = kForwardHeading;
  double yaw_rate = 0.0;
  double length = 4.0;
  double width = 1.8;
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Segment {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Scene {
  double timestamp = 0.0;
  EgoState ego;
  std::vector<AgentState> agents;
  std::vector<Segment> boundaries;
  /// Past ego positions, oldest first, spaced kStepSeconds apart; last entry is the current position.
  std::vector<Vec2> ego_history;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Trajectory {
  double step_s = kStepSeconds;
  std::vector<Vec2> points;

  int size() const { return static_cast<int>(points.size()); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws PreconditionError unless the trajectory is non-empty with a positive step.
void validate_trajectory(const Trajectory& t);

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

/// Lists every violated scene invariant.
ValidationReport validate_scene(const Scene& scene);

/// Ego footprint used for rendering and collision checks.
struct EgoFootprint {
  double length = 4.08;
  double width = 1.73;
};

}  // namespace vwl
