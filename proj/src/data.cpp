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

#include "vwl/data.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vwl/kinematics.hpp"
#include "vwl/metrics.hpp"
#include "vwl/random.hpp"

namespace vwl::data {

using nlohmann::json;

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "val"; }

std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::kLead: return "lead";
    case AgentRole::kOncoming: return "oncoming";
    case AgentRole::kCrossing: return "crossing";
    case AgentRole::kParked: return "parked";
    case AgentRole::kBehind: return "behind";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const char* field, const char* what) {
    if (!ok) throw PreconditionError(std::string(field) + ": " + what);
  };
  check(n_scenes > 0, "n_scenes", "must be > 0");
  check(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction", "must lie in [0, 1)");
  check(agents_min >= 0, "agents_min", "must be >= 0");
  check(agents_max >= agents_min, "agents_max", "must be >= agents_min");
  check(ego_speed_min > 0.0, "ego_speed_min", "must be > 0");
  check(ego_speed_max >= ego_speed_min, "ego_speed_max", "must be >= ego_speed_min");
  check(cruise_speed > 0.0, "cruise_speed", "must be > 0");
  check(ego_accel_max >= 0.0 && ego_speed_min - 2.0 * ego_accel_max * kStepSeconds > 0.0, "ego_accel_max",
        "must keep every historical speed positive");
  auto proportions = [&](const auto& mix, const char* field) {
    double sum = 0.0;
    for (double p : mix) {
      check(p >= 0.0 && std::isfinite(p), field, "entries must be >= 0");
      sum += p;
    }
    check(std::abs(sum - 1.0) <= 1e-9, field, "proportions must sum to 1");
  };
  proportions(goal_mix, "goal_mix");
  proportions(role_mix, "role_mix");
  check(road_left_x < -1.0 && road_right_x > 1.0, "road_left_x/road_right_x", "road must contain the ego");
  check(lane_width > 0.0, "lane_width", "must be > 0");
  check(rejection_budget > 0, "rejection_budget", "must be > 0");
}

int ScenarioConfig::n_val() const { return static_cast<int>(std::lround(n_scenes * val_fraction)); }

// ---------------------------------------------------------------------------
// Expert

bool expert_plan(const Scene& scene, MissionGoal goal, double cruise_speed, ExpertPlan& out) {
  const double speed = scene.ego.velocity.norm();
  std::vector<std::pair<Longitudinal, int>> profiles;
  if (speed < cruise_speed) profiles.emplace_back(Longitudinal::kAccelerate, 3);
  profiles.emplace_back(Longitudinal::kKeep, policy::TrajectoryVocabulary::kKeepAccelIndex);
  profiles.emplace_back(Longitudinal::kDecelerate, 1);
  profiles.emplace_back(Longitudinal::kStop, 0);
  for (const auto& [label, accel] : profiles) {
    const std::vector<int> tokens(kHorizon, policy::TrajectoryVocabulary::token(accel, goal));
    Trajectory t = policy::TrajectoryVocabulary::decode(tokens, speed);
    if (!metrics::collision_trace(t, scene).any()) {
      out = {label, std::move(t)};
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Scene synthesis

namespace {

template <std::size_t N>
int draw(Rng& rng, const std::array<double, N>& mix) {
  return rng.categorical(Eigen::Map<const Eigen::Matrix<double, static_cast<int>(N), 1>>(mix.data()));
}

AgentState make_agent(AgentRole role, const ScenarioConfig& cfg, Rng& rng) {
  AgentState a;
  a.length = rng.uniform(3.8, 4.8);
  a.width = rng.uniform(1.7, 2.0);
  switch (role) {
    case AgentRole::kLead: {
      a.position = {rng.uniform(-0.4, 0.4), rng.uniform(7.0, 28.0)};
      a.velocity = {0.0, rng.uniform(0.0, 2.0)};
      break;
    }
    case AgentRole::kOncoming: {
      a.position = {-cfg.lane_width + rng.uniform(-0.3, 0.3), rng.uniform(4.0, 30.0)};
      a.velocity = {0.0, -rng.uniform(3.0, 9.0)};
      a.heading = -kForwardHeading;
      break;
    }
    case AgentRole::kCrossing: {
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      a.kind = AgentKind::kPedestrian;
      a.length = 0.6;
      a.width = 0.6;
      a.position = {side * rng.uniform(3.0, 6.0), rng.uniform(6.0, 20.0)};
      a.velocity = {-side * rng.uniform(0.8, 1.6), 0.0};
      a.heading = side > 0.0 ? std::numbers::pi : 0.0;
      break;
    }
    case AgentRole::kParked: {
      a.position = {-cfg.lane_width + rng.uniform(-0.3, 0.3), rng.uniform(6.0, 30.0)};
      break;
    }
    case AgentRole::kBehind: {
      a.position = {rng.uniform(-0.3, 0.3), rng.uniform(-22.0, -9.0)};
      a.velocity = {0.0, rng.uniform(3.0, 10.0)};
      break;
    }
  }
  return a;
}

std::vector<Segment> make_boundaries(MissionGoal goal, const ScenarioConfig& cfg) {
  constexpr double kRear = -16.0, kFar = 32.0, kCorner = 0.0;
  std::vector<Segment> b;
  b.push_back({Vec2(cfg.road_left_x, kRear), Vec2(cfg.road_left_x, goal == MissionGoal::kLeft ? kCorner : kFar)});
  b.push_back({Vec2(cfg.road_right_x, kRear), Vec2(cfg.road_right_x, goal == MissionGoal::kRight ? kCorner : kFar)});
  return b;
}

Scene make_scene(const ScenarioConfig& cfg, MissionGoal goal, Rng& rng, double timestamp) {
  Scene s;
  s.timestamp = timestamp;
  const double v = rng.uniform(cfg.ego_speed_min, cfg.ego_speed_max);
  const double a = rng.uniform(-cfg.ego_accel_max, cfg.ego_accel_max);
  const double dt = kStepSeconds;
  s.ego.velocity = {0.0, v};
  s.ego.acceleration = {0.0, a};
  // History consistent with the finite-difference estimator: v at t, v - a dt at t-1, v - 2a dt at t-2.
  const double y1 = -v * dt;
  const double y2 = y1 - (v - a * dt) * dt;
  const double y3 = y2 - (v - 2.0 * a * dt) * dt;
  s.ego_history = {Vec2(0.0, y3), Vec2(0.0, y2), Vec2(0.0, y1), Vec2(0.0, 0.0)};
  s.boundaries = make_boundaries(goal, cfg);

  const int n_agents = rng.uniform_int(cfg.agents_min, cfg.agents_max);
  const worldsim::OrientedBox ego_zone{s.ego.position, s.ego.heading, EgoFootprint{}.length + 2.0,
                                       EgoFootprint{}.width + 2.0};
  for (int i = 0; i < n_agents; ++i) {
    const auto role = static_cast<AgentRole>(draw(rng, cfg.role_mix));
    for (int tries = 0; tries < 20; ++tries) {
      AgentState cand = make_agent(role, cfg, rng);
      const worldsim::OrientedBox box = worldsim::agent_box(cand);
      bool clear = !worldsim::boxes_overlap(box, ego_zone);
      for (const AgentState& o : s.agents) clear = clear && !worldsim::boxes_overlap(box, worldsim::agent_box(o));
      if (clear) {
        cand.id = static_cast<std::int64_t>(s.agents.size()) + 1;
        s.agents.push_back(cand);
        break;
      }
    }
  }
  return s;
}

}  // namespace

std::vector<DatasetRecord> generate_scenarios(const ScenarioConfig& cfg, const policy::PolicyConfig& pcfg) {
  cfg.validate();
  std::vector<DatasetRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.n_scenes));
  const int n_train = cfg.n_train();
  for (int i = 0; i < cfg.n_scenes; ++i) {
    bool done = false;
    std::string last_issue = "every expert profile collides";
    for (int attempt = 0; attempt < cfg.rejection_budget && !done; ++attempt) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)));
      const auto goal = static_cast<MissionGoal>(draw(rng, cfg.goal_mix));
      DatasetRecord r;
      r.scene = make_scene(cfg, goal, rng, static_cast<double>(i));
      const ValidationReport report = validate_scene(r.scene);
      if (!report.ok()) {
        last_issue = report.issues.front();
        continue;
      }
      if (worldsim::check_collision(r.scene, {r.scene.ego.position, r.scene.ego.heading})) {
        last_issue = "initial overlap";
        continue;
      }
      ExpertPlan plan;
      if (!expert_plan(r.scene, goal, cfg.cruise_speed, plan)) continue;
      r.goal = goal;
      r.gt_action = {goal, plan.longitudinal};
      r.gt_trajectory = std::move(plan.trajectory);
      const Vec2 first = r.gt_trajectory.points.front();
      const double heading =
          kForwardHeading + (goal == Lateral::kLeft ? 1.0 : goal == Lateral::kRight ? -1.0 : 0.0) *
                                policy::TrajectoryVocabulary::yaw_step();
      r.gt_short = {first, kinematics::heading_label(Vec2(std::cos(heading), std::sin(heading)))};
      r.gt_future_grid = worldsim::imagine(r.scene, first, pcfg.dt, pcfg.grid, pcfg.refine.ego);
      r.split = i < n_train ? Split::kTrain : Split::kVal;
      out.push_back(std::move(r));
      done = true;
    }
    if (!done) {
      throw GenerationError("scene " + std::to_string(i) + ": rejection budget of " +
                            std::to_string(cfg.rejection_budget) + " exhausted (" + last_issue + ")");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL persistence

namespace {

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json points(const std::vector<Vec2>& ps) {
  json a = json::array();
  for (const Vec2& p : ps) a.push_back(vec(p));
  return a;
}

std::vector<Vec2> points(const json& j) {
  std::vector<Vec2> ps;
  for (const json& e : j) ps.push_back(vec(e));
  return ps;
}

template <typename Enum, typename Parse>
Enum parse_enum(const json& j, Parse parse, const char* what) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw std::invalid_argument(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

json to_json(const DatasetRecord& r) {
  json agents = json::array();
  for (const AgentState& a : r.scene.agents) {
    agents.push_back({{"id", a.id},
                      {"kind", std::string(to_string(a.kind))},
                      {"position", vec(a.position)},
                      {"velocity", vec(a.velocity)},
                      {"heading", a.heading},
                      {"yaw_rate", a.yaw_rate},
                      {"length", a.length},
                      {"width", a.width}});
  }
  json bounds = json::array();
  for (const Segment& s : r.scene.boundaries) bounds.push_back(json::array({vec(s.a), vec(s.b)}));
  const worldsim::GridSpec& g = r.gt_future_grid.spec;
  return {{"scene",
           {{"timestamp", r.scene.timestamp},
            {"ego",
             {{"position", vec(r.scene.ego.position)},
              {"velocity", vec(r.scene.ego.velocity)},
              {"acceleration", vec(r.scene.ego.acceleration)},
              {"heading", r.scene.ego.heading}}},
            {"agents", agents},
            {"boundaries", bounds},
            {"ego_history", points(r.scene.ego_history)}}},
          {"goal", std::string(to_string(r.goal))},
          {"gt_short", {{"waypoint", vec(r.gt_short.waypoint)}, {"direction", std::string(to_string(r.gt_short.direction))}}},
          {"gt_future_grid",
           {{"cells_per_side", g.cells_per_side},
            {"extent_m", g.extent_m},
            {"num_classes", g.num_classes},
            {"cells", r.gt_future_grid.cells}}},
          {"gt_action",
           {{"lateral", std::string(to_string(r.gt_action.lateral))},
            {"longitudinal", std::string(to_string(r.gt_action.longitudinal))}}},
          {"gt_trajectory", {{"step_s", r.gt_trajectory.step_s}, {"points", points(r.gt_trajectory.points)}}},
          {"split", std::string(to_string(r.split))}};
}

DatasetRecord from_json(const json& j) {
  DatasetRecord r;
  const json& s = j.at("scene");
  r.scene.timestamp = s.at("timestamp").get<double>();
  const json& e = s.at("ego");
  r.scene.ego.position = vec(e.at("position"));
  r.scene.ego.velocity = vec(e.at("velocity"));
  r.scene.ego.acceleration = vec(e.at("acceleration"));
  r.scene.ego.heading = e.at("heading").get<double>();
  for (const json& a : s.at("agents")) {
    AgentState st;
    st.id = a.at("id").get<std::int64_t>();
    st.kind = parse_enum<AgentKind>(a.at("kind"), parse_agent_kind, "agent kind");
    st.position = vec(a.at("position"));
    st.velocity = vec(a.at("velocity"));
    st.heading = a.at("heading").get<double>();
    st.yaw_rate = a.at("yaw_rate").get<double>();
    st.length = a.at("length").get<double>();
    st.width = a.at("width").get<double>();
    r.scene.agents.push_back(st);
  }
  for (const json& b : s.at("boundaries")) {
    if (!b.is_array() || b.size() != 2) throw std::invalid_argument("boundary must be [[ax, ay], [bx, by]]");
    r.scene.boundaries.push_back({vec(b.at(0)), vec(b.at(1))});
  }
  r.scene.ego_history = points(s.at("ego_history"));
  r.goal = parse_enum<Lateral>(j.at("goal"), parse_lateral, "goal");
  r.gt_short.waypoint = vec(j.at("gt_short").at("waypoint"));
  r.gt_short.direction = parse_enum<Lateral>(j.at("gt_short").at("direction"), parse_lateral, "direction");
  const json& g = j.at("gt_future_grid");
  worldsim::GridSpec spec;
  spec.cells_per_side = g.at("cells_per_side").get<int>();
  spec.extent_m = g.at("extent_m").get<double>();
  spec.num_classes = g.at("num_classes").get<int>();
  spec.validate();
  r.gt_future_grid = worldsim::OccupancyGrid(spec);
  const auto cells = g.at("cells").get<std::vector<int>>();
  if (cells.size() != r.gt_future_grid.cells.size()) throw std::invalid_argument("grid has the wrong number of cells");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c] < 0 || cells[c] >= spec.num_classes) throw std::invalid_argument("grid cell class out of range");
    r.gt_future_grid.cells[c] = static_cast<std::uint8_t>(cells[c]);
  }
  r.gt_action.lateral = parse_enum<Lateral>(j.at("gt_action").at("lateral"), parse_lateral, "lateral action");
  r.gt_action.longitudinal =
      parse_enum<Longitudinal>(j.at("gt_action").at("longitudinal"), parse_longitudinal, "longitudinal action");
  r.gt_trajectory.step_s = j.at("gt_trajectory").at("step_s").get<double>();
  r.gt_trajectory.points = points(j.at("gt_trajectory").at("points"));
  const std::string split = j.at("split").get<std::string>();
  if (split != "train" && split != "val") throw std::invalid_argument("unknown split '" + split + "'");
  r.split = split == "train" ? Split::kTrain : Split::kVal;
  return r;
}

}  // namespace

void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records) {
  os << json{{"format", "vla-world-lab-dataset"}, {"version", kDatasetVersion}, {"records", records.size()}}.dump()
     << '\n';
  for (const DatasetRecord& r : records) os << to_json(r).dump() << '\n';
}

std::vector<DatasetRecord> read_dataset(std::istream& is) {
  std::string line;
  int lineno = 0;
  if (!std::getline(is, line)) throw DatasetParseError(1, "missing header");
  ++lineno;
  std::size_t expected = 0;
  try {
    const json h = json::parse(line);
    if (h.at("format").get<std::string>() != "vla-world-lab-dataset") throw std::invalid_argument("not a dataset file");
    const int version = h.at("version").get<int>();
    if (version != kDatasetVersion) throw std::invalid_argument("unsupported version " + std::to_string(version));
    expected = h.at("records").get<std::size_t>();
  } catch (const std::exception& e) {
    throw DatasetParseError(lineno, std::string("bad header: ") + e.what());
  }
  std::vector<DatasetRecord> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DatasetParseError(lineno, e.what());
    }
  }
  if (out.size() != expected) {
    throw DatasetParseError(lineno + 1, "expected " + std::to_string(expected) + " records, found " +
                                            std::to_string(out.size()));
  }
  return out;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write dataset " + path);
  write_dataset(os, records);
  if (!os) throw IoError("failed writing dataset " + path);
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read dataset " + path);
  try {
    return read_dataset(is);
  } catch (const DatasetParseError& e) {
    throw DatasetParseError(e.line, e.detail, path);
  }
}

grammar::StructuredSample make_gt_sample(const DatasetRecord& r, const policy::PolicyConfig& pcfg) {
  policy::PolicyConfig cfg = pcfg;
  cfg.pipeline = {};
  const policy::Reflection refl = policy::reflect(r.scene, r.gt_future_grid, r.gt_short.waypoint, r.goal, cfg);
  grammar::StructuredSample s;
  s.perception = policy::perception_text(r.scene);
  s.prediction = r.gt_short;
  s.visual = worldsim::tokenize(r.gt_future_grid);
  s.think = policy::think_text(refl, &r.gt_future_grid);
  s.action = r.gt_action;
  s.answer = r.gt_trajectory;
  return s;
}

}  // namespace vwl::data
