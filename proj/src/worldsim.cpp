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

#include "vwl/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vwl::worldsim {

void GridSpec::validate() const {
  require(cells_per_side > 0, "grid cells_per_side must be positive");
  require(extent_m > 0.0, "grid extent_m must be positive");
  require(num_classes >= 5, "grid needs at least the 5 named classes");
}

TokenSequence tokenize(const OccupancyGrid& grid) {
  const Codebook codebook(grid.spec.num_classes);
  TokenSequence seq;
  seq.tokens.reserve(grid.cells.size());
  for (std::uint8_t c : grid.cells) seq.tokens.push_back(codebook.token_of(c));
  return seq;
}

OccupancyGrid detokenize(const TokenSequence& tokens, const GridSpec& spec) {
  const Codebook codebook(spec.num_classes);
  if (tokens.tokens.size() != static_cast<std::size_t>(spec.num_cells())) {
    throw TokenError(TokenError::Kind::kLength, "token sequence has length " + std::to_string(tokens.tokens.size()) +
                                                    ", expected " + std::to_string(spec.num_cells()));
  }
  OccupancyGrid grid(spec);
  for (std::size_t i = 0; i < tokens.tokens.size(); ++i) {
    const std::int64_t t = tokens.tokens[i];
    if (!codebook.valid(t)) {
      throw TokenError(TokenError::Kind::kInvalidId,
                       "token " + std::to_string(t) + " at position " + std::to_string(i) + " is not in the codebook");
    }
    grid.cells[i] = codebook.class_of(t);
  }
  return grid;
}

Vec2 turn_displacement(const Vec2& v, double yaw_rate, double dt) {
  if (yaw_rate == 0.0) return v * dt;
  const double th = yaw_rate * dt;
  const Vec2 perp(-v.y(), v.x());
  return (std::sin(th) * v + (1.0 - std::cos(th)) * perp) / yaw_rate;
}

Scene step_world(const Scene& scene, double dt) {
  require(dt > 0.0, "step_world needs dt > 0");
  Scene next = scene;
  next.timestamp += dt;
  for (AgentState& a : next.agents) {
    a.position += turn_displacement(a.velocity, a.yaw_rate, dt);
    if (a.yaw_rate != 0.0) {
      a.velocity = rotate(a.velocity, a.yaw_rate * dt);
      a.heading = normalize_angle(a.heading + a.yaw_rate * dt);
    }
  }
  return next;
}

Vec2 to_frame(const Vec2& p, const Pose& pose) { return rotate(p - pose.position, kForwardHeading - pose.heading); }

Vec2 from_frame(const Vec2& p, const Pose& pose) {
  return rotate(p, pose.heading - kForwardHeading) + pose.position;
}

Scene to_frame(const Scene& scene, const Pose& pose) {
  const double dpsi = kForwardHeading - pose.heading;
  Scene out = scene;
  out.ego.position = to_frame(scene.ego.position, pose);
  out.ego.velocity = rotate(scene.ego.velocity, dpsi);
  out.ego.acceleration = rotate(scene.ego.acceleration, dpsi);
  out.ego.heading = normalize_angle(scene.ego.heading + dpsi);
  for (AgentState& a : out.agents) {
    a.position = to_frame(a.position, pose);
    a.velocity = rotate(a.velocity, dpsi);
    a.heading = normalize_angle(a.heading + dpsi);
  }
  for (Segment& s : out.boundaries) {
    s.a = to_frame(s.a, pose);
    s.b = to_frame(s.b, pose);
  }
  for (Vec2& p : out.ego_history) p = to_frame(p, pose);
  return out;
}

double heading_of(const Vec2& d, double fallback) {
  if (d.x() == 0.0 && d.y() == 0.0) return fallback;
  return std::atan2(d.y(), d.x());
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 u(std::cos(heading), std::sin(heading));
  const Vec2 n(-u.y(), u.x());
  const Vec2 hl = 0.5 * length * u;
  const Vec2 hw = 0.5 * width * n;
  return {center + hl + hw, center - hl + hw, center - hl - hw, center + hl - hw};
}

bool OrientedBox::contains(const Vec2& p) const {
  const Vec2 u(std::cos(heading), std::sin(heading));
  const Vec2 d = p - center;
  const double along = d.dot(u);
  const double across = d.x() * -u.y() + d.y() * u.x();
  return std::abs(along) <= 0.5 * length && std::abs(across) <= 0.5 * width;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

struct CellRange {
  int row0, row1, col0, col1;
};

CellRange cells_covering(const GridSpec& spec, double xmin, double xmax, double ymin, double ymax) {
  const double s = spec.cell_size();
  const double half = 0.5 * spec.extent_m;
  const int n = spec.cells_per_side;
  auto lo = [&](double v) { return std::clamp(static_cast<int>(std::floor((v + half) / s - 0.5)), 0, n - 1); };
  auto hi = [&](double v) { return std::clamp(static_cast<int>(std::ceil((v + half) / s - 0.5)), 0, n - 1); };
  return {lo(ymin), hi(ymax), lo(xmin), hi(xmax)};
}

bool outside(const GridSpec& spec, double xmin, double xmax, double ymin, double ymax) {
  const double half = 0.5 * spec.extent_m;
  return xmax < -half || xmin > half || ymax < -half || ymin > half;
}

void paint_box(OccupancyGrid& grid, const OrientedBox& box, CellClass cls) {
  const auto c = box.corners();
  double xmin = c[0].x(), xmax = c[0].x(), ymin = c[0].y(), ymax = c[0].y();
  for (const Vec2& p : c) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  if (outside(grid.spec, xmin, xmax, ymin, ymax)) return;
  const CellRange r = cells_covering(grid.spec, xmin, xmax, ymin, ymax);
  const int n = grid.spec.cells_per_side;
  for (int row = r.row0; row <= r.row1; ++row) {
    for (int col = r.col0; col <= r.col1; ++col) {
      if (box.contains(grid.spec.cell_center(row, col))) grid.cells[static_cast<std::size_t>(row * n + col)] =
          static_cast<std::uint8_t>(cls);
    }
  }
}

void paint_segment(OccupancyGrid& grid, const Segment& seg) {
  const double reach = 0.5 * grid.spec.cell_size();
  const double xmin = std::min(seg.a.x(), seg.b.x()) - reach, xmax = std::max(seg.a.x(), seg.b.x()) + reach;
  const double ymin = std::min(seg.a.y(), seg.b.y()) - reach, ymax = std::max(seg.a.y(), seg.b.y()) + reach;
  if (outside(grid.spec, xmin, xmax, ymin, ymax)) return;
  const CellRange r = cells_covering(grid.spec, xmin, xmax, ymin, ymax);
  const int n = grid.spec.cells_per_side;
  for (int row = r.row0; row <= r.row1; ++row) {
    for (int col = r.col0; col <= r.col1; ++col) {
      if (point_segment_distance(grid.spec.cell_center(row, col), seg.a, seg.b) <= reach) {
        grid.cells[static_cast<std::size_t>(row * n + col)] = static_cast<std::uint8_t>(CellClass::kBoundary);
      }
    }
  }
}

}  // namespace

OrientedBox agent_box(const AgentState& a) { return {a.position, a.heading, a.length, a.width}; }

OrientedBox ego_box(const Pose& pose, const EgoFootprint& ego) {
  return {pose.position, pose.heading, ego.length, ego.width};
}

OccupancyGrid render_grid(const Scene& scene, const GridSpec& spec, const EgoFootprint& ego) {
  spec.validate();
  OccupancyGrid grid(spec);
  // Paint lowest priority first so higher classes overwrite shared cells.
  for (const Segment& s : scene.boundaries) paint_segment(grid, s);
  for (const AgentState& a : scene.agents) {
    if (a.kind == AgentKind::kPedestrian) paint_box(grid, agent_box(a), CellClass::kPedestrian);
  }
  for (const AgentState& a : scene.agents) {
    if (a.kind == AgentKind::kVehicle) paint_box(grid, agent_box(a), CellClass::kVehicle);
  }
  paint_box(grid, ego_box({scene.ego.position, scene.ego.heading}, ego), CellClass::kEgo);
  return grid;
}

Pose imagined_pose(const Scene& scene, const Vec2& short_waypoint) {
  return {short_waypoint, heading_of(short_waypoint - scene.ego.position, scene.ego.heading)};
}

OccupancyGrid imagine(const Scene& scene, const Vec2& short_waypoint, double dt, const GridSpec& spec,
                      const EgoFootprint& ego) {
  Scene next = step_world(scene, dt);
  const Pose pose = imagined_pose(scene, short_waypoint);
  next.ego.velocity = (short_waypoint - scene.ego.position) / dt;
  next.ego.position = pose.position;
  next.ego.heading = pose.heading;
  return render_grid(to_frame(next, pose), spec, ego);
}

std::vector<Vec2> obstacle_cells(const OccupancyGrid& grid) {
  std::vector<Vec2> out;
  const int n = grid.spec.cells_per_side;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const auto c = grid.at(row, col);
      if (c != static_cast<std::uint8_t>(CellClass::kFree) && c != static_cast<std::uint8_t>(CellClass::kEgo)) {
        out.push_back(grid.spec.cell_center(row, col));
      }
    }
  }
  return out;
}

std::vector<Conflict> corridor_conflicts(const OccupancyGrid& grid, const Trajectory& traj, double halfwidth,
                                         const Vec2& start) {
  const std::vector<Vec2> obstacles = obstacle_cells(grid);
  std::vector<Conflict> out;
  out.reserve(traj.points.size());
  Vec2 prev = start;
  for (int h = 0; h < traj.size(); ++h) {
    const Vec2& p = traj.points[static_cast<std::size_t>(h)];
    Conflict c;
    c.step = h;
    for (const Vec2& o : obstacles) {
      if (point_segment_distance(o, prev, p) > halfwidth) continue;
      const double d = (o - p).norm();
      if (d < c.distance) {
        c.distance = d;
        c.obstacle = o;
      }
    }
    out.push_back(c);
    prev = p;
  }
  return out;
}

namespace {

template <std::size_t N>
void project(const std::array<Vec2, N>& pts, const Vec2& axis, double& lo, double& hi) {
  lo = hi = pts[0].dot(axis);
  for (std::size_t i = 1; i < N; ++i) {
    const double v = pts[i].dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}

template <std::size_t N, std::size_t M>
bool separated_on(const std::array<Vec2, N>& a, const std::array<Vec2, M>& b, const Vec2& axis) {
  double alo, ahi, blo, bhi;
  project(a, axis, alo, ahi);
  project(b, axis, blo, bhi);
  return ahi < blo || bhi < alo;
}

Vec2 axis_of(double heading) { return {std::cos(heading), std::sin(heading)}; }
Vec2 normal_of(double heading) { return {-std::sin(heading), std::cos(heading)}; }

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (const Vec2& axis : {axis_of(a.heading), normal_of(a.heading), axis_of(b.heading), normal_of(b.heading)}) {
    if (separated_on(ca, cb, axis)) return false;
  }
  return true;
}

bool box_segment_overlap(const OrientedBox& box, const Segment& seg) {
  const auto cb = box.corners();
  const std::array<Vec2, 2> cs = {seg.a, seg.b};
  if (separated_on(cb, cs, axis_of(box.heading)) || separated_on(cb, cs, normal_of(box.heading))) return false;
  const Vec2 d = seg.b - seg.a;
  if (d.squaredNorm() > 0.0 && separated_on(cb, cs, Vec2(-d.y(), d.x()).normalized())) return false;
  return true;
}

bool check_collision(const Scene& scene, const Pose& ego_pose, const EgoFootprint& ego) {
  const OrientedBox eb = ego_box(ego_pose, ego);
  for (const AgentState& a : scene.agents) {
    if (boxes_overlap(eb, agent_box(a))) return true;
  }
  for (const Segment& s : scene.boundaries) {
    if (box_segment_overlap(eb, s)) return true;
  }
  return false;
}

}  // namespace vwl::worldsim
