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
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "vwl/core.hpp"

namespace vwl::worldsim {

/// Cell classes; the fixed codebook maps class k to token k.
enum class CellClass : std::uint8_t { kFree = 0, kEgo = 1, kVehicle = 2, kPedestrian = 3, kBoundary = 4 };

struct GridSpec {
  int cells_per_side = 32;
  double extent_m = 32.0;
  int num_classes = 8;

  int num_cells() const { return cells_per_side * cells_per_side; }
  double cell_size() const { return extent_m / cells_per_side; }
  /// Centre of cell (row, col); row 0 is the rearmost row, col 0 the leftmost column.
  Vec2 cell_center(int row, int col) const {
    const double s = cell_size();
    return {-0.5 * extent_m + (col + 0.5) * s, -0.5 * extent_m + (row + 0.5) * s};
  }
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct OccupancyGrid {
  GridSpec spec;
  /// Row-major class indices, `spec.num_cells()` entries.
  std::vector<std::uint8_t> cells;

  explicit OccupancyGrid(const GridSpec& s = {}) : spec(s), cells(static_cast<std::size_t>(s.num_cells()), 0) {}
  std::uint8_t at(int row, int col) const { return cells[static_cast<std::size_t>(row * spec.cells_per_side + col)]; }
  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

/// Visual token ids. Out-of-range ids are representable so that reward code can score them.
struct TokenSequence {
  std::vector<std::int64_t> tokens;
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Class-index <-> token-id bijection of size V.
class Codebook {
 public:
  explicit Codebook(int size = 8) : size_(size) { require(size >= 2, "codebook needs at least 2 entries"); }
  int size() const { return size_; }
  bool valid(std::int64_t token) const { return token >= 0 && token < size_; }
  std::int64_t token_of(std::uint8_t cls) const { return cls; }
  std::uint8_t class_of(std::int64_t token) const { return static_cast<std::uint8_t>(token); }

 private:
  int size_;
};

struct TokenError : std::invalid_argument {
  enum class Kind { kLength, kInvalidId };
  TokenError(Kind k, const std::string& what) : std::invalid_argument(what), kind(k) {}
  Kind kind;
};

TokenSequence tokenize(const OccupancyGrid& grid);
/// Throws TokenError on a wrong length or an id outside the codebook.
OccupancyGrid detokenize(const TokenSequence& tokens, const GridSpec& spec);

/// Advances agents by `dt`: constant velocity, or constant turn when yaw_rate != 0.
Scene step_world(const Scene& scene, double dt);

/// Closed-form constant-turn displacement of velocity `v` rotating at `yaw_rate` for `dt`.
Vec2 turn_displacement(const Vec2& v, double yaw_rate, double dt);

struct Pose {
  Vec2 position = Vec2::Zero();
  double heading = kForwardHeading;
};

/// Re-expresses the scene in the frame of `pose` (which becomes origin, facing +y).
Scene to_frame(const Scene& scene, const Pose& pose);
Vec2 to_frame(const Vec2& p, const Pose& pose);
Vec2 from_frame(const Vec2& p, const Pose& pose);

/// Heading from a displacement; zero displacement keeps `fallback`.
double heading_of(const Vec2& displacement, double fallback = kForwardHeading);

OccupancyGrid render_grid(const Scene& scene, const GridSpec& spec, const EgoFootprint& ego = {});

/// Pose the ego takes after moving to the short-term waypoint.
Pose imagined_pose(const Scene& scene, const Vec2& short_waypoint);

/// Action-conditioned next frame: agents step, ego moves to the short-term
/// waypoint, the frame re-centres on the new ego pose, and is rendered.
OccupancyGrid imagine(const Scene& scene, const Vec2& short_waypoint, double dt, const GridSpec& spec,
                      const EgoFootprint& ego = {});

inline constexpr double kNoConflict = std::numeric_limits<double>::infinity();

struct Conflict {
  int step = 0;
  /// Distance from the waypoint to the nearest obstacle cell in its corridor, or kNoConflict.
  double distance = kNoConflict;
  /// Centre of that nearest obstacle cell (meaningless without a conflict).
  Vec2 obstacle = Vec2::Zero();
  bool any() const { return distance != kNoConflict; }
};

/// Obstacle cell centres (non-free, non-ego) of a grid.
std::vector<Vec2> obstacle_cells(const OccupancyGrid& grid);

/// Per-waypoint corridor check. Waypoint h owns the capsule of radius
/// `halfwidth` around the segment from the previous waypoint (or `start`
/// for the first) to itself; the reported distance is from the waypoint to
/// the closest obstacle cell inside that capsule.
std::vector<Conflict> corridor_conflicts(const OccupancyGrid& grid, const Trajectory& traj, double halfwidth,
                                         const Vec2& start = Vec2::Zero());

inline double default_corridor_halfwidth(const EgoFootprint& ego = {}) { return 0.5 * ego.width + 0.2; }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

struct OrientedBox {
  Vec2 center = Vec2::Zero();
  double heading = kForwardHeading;  // direction of the length axis
  double length = 1.0;
  double width = 1.0;

  std::array<Vec2, 4> corners() const;
  bool contains(const Vec2& p) const;
};

/// Separating-axis overlap test; touching counts as overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);
bool box_segment_overlap(const OrientedBox& box, const Segment& seg);

OrientedBox agent_box(const AgentState& a);
OrientedBox ego_box(const Pose& pose, const EgoFootprint& ego = {});

/// True iff the ego footprint at `pose` touches any agent box or boundary segment.
bool check_collision(const Scene& scene, const Pose& ego_pose, const EgoFootprint& ego = {});

}  // namespace vwl::worldsim
