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

#include "vwl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vwl/random.hpp"

namespace vwl::policy {

int sector_of(const Vec2& p) {
  const double b = kinematics::bearing(p);
  const double width = 2.0 * std::numbers::pi / kNumSectors;
  int idx = static_cast<int>(std::floor((b + 0.5 * width) / width));
  idx %= kNumSectors;
  if (idx < 0) idx += kNumSectors;
  return idx;
}

FeatureVector extract_features(const Scene& scene, MissionGoal goal, bool perception) {
  FeatureVector phi = FeatureVector::Zero();
  phi(0) = scene.ego.velocity.norm();
  phi(1) = scene.ego.acceleration.norm();
  phi(2 + static_cast<int>(goal)) = 1.0;
  for (int s = 0; s < kNumSectors; ++s) phi(5 + s) = kSectorCap;
  if (perception) {
    for (const AgentState& a : scene.agents) {
      const Vec2 rel = a.position - scene.ego.position;
      const int s = sector_of(rel);
      phi(5 + s) = std::min(phi(5 + s), rel.norm());
    }
  }
  phi(13) = 1.0;
  return phi;
}

FeatureVector scaled_features(const FeatureVector& phi) {
  FeatureVector scale;
  scale << 0.1, 0.25, 1.0, 1.0, 1.0, Eigen::Matrix<double, kNumSectors, 1>::Constant(1.0 / kSectorCap), 1.0;
  return phi.cwiseProduct(scale);
}

// ---------------------------------------------------------------------------
// Trajectory vocabulary

double TrajectoryVocabulary::yaw_step() { return std::atan2(0.25, 0.97); }

namespace {

struct PlanState {
  Vec2 position = Vec2::Zero();
  double speed = 0.0;
  double heading = kForwardHeading;
};

double yaw_of(Lateral c) {
  switch (c) {
    case Lateral::kLeft: return TrajectoryVocabulary::yaw_step();
    case Lateral::kRight: return -TrajectoryVocabulary::yaw_step();
    default: return 0.0;
  }
}

PlanState advance(const PlanState& s, int token, double dt) {
  PlanState n = s;
  n.speed = std::max(0.0, s.speed + TrajectoryVocabulary::kAccelLevels[static_cast<std::size_t>(
                                        TrajectoryVocabulary::accel_index(token))] * dt);
  n.heading = s.heading + yaw_of(TrajectoryVocabulary::curvature(token));
  n.position = s.position + n.speed * dt * Vec2(std::cos(n.heading), std::sin(n.heading));
  return n;
}

}  // namespace

Trajectory TrajectoryVocabulary::decode(const std::vector<int>& tokens, double v0, double dt) {
  Trajectory t;
  t.step_s = dt;
  PlanState s;
  s.speed = v0;
  for (int tok : tokens) {
    require(tok >= 0 && tok < kTrajVocab, "trajectory token out of range");
    s = advance(s, tok, dt);
    t.points.push_back(s.position);
  }
  return t;
}

std::vector<int> TrajectoryVocabulary::encode(const Trajectory& traj, double v0) {
  std::vector<int> tokens;
  PlanState s;
  s.speed = v0;
  for (const Vec2& target : traj.points) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    PlanState best_state;
    for (int k = 0; k < kTrajVocab; ++k) {
      const PlanState n = advance(s, k, traj.step_s);
      const double d = (n.position - target).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
        best_state = n;
      }
    }
    tokens.push_back(best);
    s = best_state;
  }
  return tokens;
}

Trajectory TrajectoryVocabulary::nominal(MissionGoal goal, double v0, int horizon, double dt) {
  return decode(std::vector<int>(static_cast<std::size_t>(horizon), token(kKeepAccelIndex, goal)), v0, dt);
}

// ---------------------------------------------------------------------------
// Parameters

PolicyParams PolicyParams::zeros(int num_classes, int horizon) {
  PolicyParams p;
  p.gen_weight = Eigen::MatrixXd::Zero(num_classes, num_classes);
  p.gen_bias = Eigen::VectorXd::Zero(num_classes);
  p.act_weight = Eigen::MatrixXd::Zero(kNumActions, kFeatureDim);
  p.traj_weight.assign(static_cast<std::size_t>(horizon), Eigen::MatrixXd::Zero(kTrajVocab, kTrajInputDim));
  return p;
}

namespace {

template <typename Params, typename F>
void for_each_block(Params& p, F&& f) {
  f(p.gen_weight);
  f(p.gen_bias);
  f(p.act_weight);
  for (auto& w : p.traj_weight) f(w);
}

template <typename F>
void for_each_block_pair(PolicyParams& a, const PolicyParams& b, F&& f) {
  f(a.gen_weight, b.gen_weight);
  f(a.gen_bias, b.gen_bias);
  f(a.act_weight, b.act_weight);
  for (std::size_t i = 0; i < a.traj_weight.size(); ++i) f(a.traj_weight[i], b.traj_weight[i]);
}

}  // namespace

Eigen::Index PolicyParams::size() const {
  Eigen::Index n = 0;
  for_each_block(*this, [&](const auto& m) { n += m.size(); });
  return n;
}

Eigen::VectorXd PolicyParams::to_vector() const {
  Eigen::VectorXd v(size());
  Eigen::Index off = 0;
  for_each_block(*this, [&](const auto& m) {
    v.segment(off, m.size()) = m.reshaped();
    off += m.size();
  });
  return v;
}

void PolicyParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != size()) throw ShapeError("parameter vector has the wrong length");
  Eigen::Index off = 0;
  for_each_block(*this, [&](auto& m) {
    m.reshaped() = v.segment(off, m.size());
    off += m.size();
  });
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
  if (traj_weight.size() != o.traj_weight.size()) return false;
  auto same = [](const auto& x, const auto& y) { return x.rows() == y.rows() && x.cols() == y.cols(); };
  bool ok = same(gen_weight, o.gen_weight) && same(gen_bias, o.gen_bias) && same(act_weight, o.act_weight);
  for (std::size_t i = 0; ok && i < traj_weight.size(); ++i) ok = same(traj_weight[i], o.traj_weight[i]);
  return ok;
}

PolicyParams& PolicyParams::axpy(double alpha, const PolicyParams& other) {
  if (!same_shape(other)) throw ShapeError("axpy on parameters of different shapes");
  for_each_block_pair(*this, other, [&](auto& a, const auto& b) { a += alpha * b; });
  return *this;
}

double PolicyParams::squared_norm() const {
  double s = 0.0;
  for_each_block(*this, [&](const auto& m) { s += m.squaredNorm(); });
  return s;
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  for_each_block(*this, [&](const auto& m) { ok = ok && m.allFinite(); });
  return ok;
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (!a.same_shape(b)) return false;
  return a.to_vector() == b.to_vector();
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointMagic = "vla-world-lab-checkpoint";
constexpr int kCheckpointVersion = 1;

void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      os << (c ? " " : "") << buf;
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& is, const std::string& expected_name) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> name >> rows >> cols)) throw IoError("checkpoint truncated before block " + expected_name);
  if (name != expected_name) throw IoError("checkpoint expected block " + expected_name + ", found " + name);
  if (rows < 0 || cols < 0 || rows > 4096 || cols > 4096) throw IoError("checkpoint block " + name + " has bad shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(is >> tok)) throw IoError("checkpoint block " + name + " truncated");
      char* end = nullptr;
      m(r, c) = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw IoError("checkpoint block " + name + " has a bad number");
    }
  }
  return m;
}

}  // namespace

void write_checkpoint(std::ostream& os, const PolicyParams& p) {
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "horizon " << p.traj_weight.size() << '\n';
  write_matrix(os, "gen_weight", p.gen_weight);
  write_matrix(os, "gen_bias", p.gen_bias);
  write_matrix(os, "act_weight", p.act_weight);
  for (std::size_t h = 0; h < p.traj_weight.size(); ++h) write_matrix(os, "traj_weight." + std::to_string(h), p.traj_weight[h]);
  os << "end\n";
}

PolicyParams read_checkpoint(std::istream& is) {
  std::string magic, key;
  int version = 0;
  std::size_t horizon = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw IoError("not a policy checkpoint");
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  if (!(is >> key >> horizon) || key != "horizon" || horizon == 0 || horizon > 64) throw IoError("bad checkpoint horizon");
  PolicyParams p;
  p.gen_weight = read_matrix(is, "gen_weight");
  const Eigen::MatrixXd bias = read_matrix(is, "gen_bias");
  if (bias.cols() != 1) throw ShapeError("gen_bias must be a column");
  p.gen_bias = bias.col(0);
  p.act_weight = read_matrix(is, "act_weight");
  for (std::size_t h = 0; h < horizon; ++h) p.traj_weight.push_back(read_matrix(is, "traj_weight." + std::to_string(h)));
  if (!(is >> key) || key != "end") throw IoError("checkpoint missing end marker");

  const PolicyParams ref = PolicyParams::zeros(static_cast<int>(p.gen_bias.size()), static_cast<int>(horizon));
  if (!p.same_shape(ref) || p.gen_weight.rows() != p.gen_weight.cols()) {
    throw ShapeError("checkpoint head shapes are inconsistent");
  }
  return p;
}

void save_checkpoint(const std::string& path, const PolicyParams& p) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path);
  write_checkpoint(os, p);
  if (!os) throw IoError("failed writing checkpoint " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint " + path);
  return read_checkpoint(is);
}

// ---------------------------------------------------------------------------
// Reflection and refinement

namespace {

struct Polyline {
  std::vector<Vec2> vertices;  // start first
  std::vector<double> arc;     // cumulative length at each vertex

  explicit Polyline(const Vec2& start, const std::vector<Vec2>& pts) {
    vertices.push_back(start);
    arc.push_back(0.0);
    for (const Vec2& p : pts) {
      arc.push_back(arc.back() + (p - vertices.back()).norm());
      vertices.push_back(p);
    }
  }
  double length() const { return arc.back(); }

  Vec2 at(double s) const {
    if (s <= 0.0) return vertices.front();
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (s <= arc[i]) {
        const double seg = arc[i] - arc[i - 1];
        if (seg <= 0.0) return vertices[i];
        return vertices[i - 1] + (s - arc[i - 1]) / seg * (vertices[i] - vertices[i - 1]);
      }
    }
    return vertices.back();
  }

  /// Unit direction of the segment holding arc length `s`; zero-length segments are skipped.
  Vec2 direction(double s, const Vec2& fallback) const {
    Vec2 dir = fallback;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (arc[i] > arc[i - 1]) dir = (vertices[i] - vertices[i - 1]) / (arc[i] - arc[i - 1]);
      if (s < arc[i]) break;
    }
    return dir;
  }
};

// First arc length at which the ego footprint, aligned with the path, touches an obstacle
// cell ahead of its centre. Cells are treated as squares by inflating the footprint.
double first_contact(const Polyline& path, const std::vector<Vec2>& cells, double cell_size, const EgoFootprint& ego,
                     double until, const Vec2& fallback) {
  constexpr double kSweepStep = 0.05;
  const double half_len = 0.5 * ego.length + 0.5 * cell_size;
  const double half_wid = 0.5 * ego.width + 0.5 * cell_size;
  for (double s = 0.0;; s = std::min(until, s + kSweepStep)) {
    const Vec2 c = path.at(s);
    const Vec2 t = path.direction(s, fallback);
    const Vec2 n(-t.y(), t.x());
    for (const Vec2& o : cells) {
      const Vec2 d = o - c;
      const double fwd = d.dot(t);
      if (fwd >= 0.0 && fwd <= half_len && std::abs(d.dot(n)) <= half_wid) return s;
    }
    if (s >= until) break;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

Trajectory refine_trajectory(const Scene& scene, const worldsim::OccupancyGrid& grid, const Vec2& short_waypoint,
                             const Trajectory& initial, const RefineConfig& cfg) {
  validate_trajectory(initial);
  const worldsim::Pose pose = worldsim::imagined_pose(scene, short_waypoint);
  std::vector<Vec2> in_grid;
  for (const Vec2& p : initial.points) in_grid.push_back(worldsim::to_frame(p, pose));
  const Polyline path(worldsim::to_frame(scene.ego.position, pose), in_grid);
  const int steps = std::min(cfg.lookahead_steps, initial.size());

  // Any obstacle cell inside the corridors of the considered steps triggers the check.
  const std::vector<Vec2> cells = worldsim::obstacle_cells(grid);
  bool triggered = false;
  for (const Vec2& o : cells) {
    for (int h = 0; h < steps && !triggered; ++h) {
      const Vec2& a = path.vertices[static_cast<std::size_t>(h)];
      const Vec2& b = path.vertices[static_cast<std::size_t>(h + 1)];
      if (worldsim::point_segment_distance(o, a, b) > cfg.halfwidth) continue;
      const double seg = (b - a).norm();
      const double along = seg > 0.0 ? (o - a).dot(b - a) / seg : 0.0;
      triggered = path.arc[static_cast<std::size_t>(h)] + along > 0.0;
    }
    if (triggered) break;
  }
  if (!triggered) return initial;

  const Vec2 facing = Vec2(std::cos(scene.ego.heading - pose.heading + kForwardHeading),
                           std::sin(scene.ego.heading - pose.heading + kForwardHeading));
  const double contact = first_contact(path, cells, grid.spec.cell_size(), cfg.ego,
                                       path.arc[static_cast<std::size_t>(steps)], facing);
  if (!std::isfinite(contact)) return initial;
  const double stop_at = std::max(0.0, contact - cfg.safety_margin);
  // Concave progress profile: speeds decrease every step, the path shape is kept.
  const Polyline original(scene.ego.position, initial.points);
  Trajectory out;
  out.step_s = initial.step_s;
  const double n = initial.size();
  for (int h = 1; h <= initial.size(); ++h) {
    const double u = 1.0 - h / n;
    out.points.push_back(original.at(stop_at * (1.0 - u * u)));
  }
  return out;
}

Reflection reflect(const Scene& scene, const worldsim::OccupancyGrid& grid, const Vec2& short_waypoint,
                   MissionGoal goal, const PolicyConfig& cfg) {
  Reflection r;
  r.features.setOnes();
  r.features(kHorizon) = 0.0;
  if (!cfg.pipeline.reasoning) return r;
  const Trajectory nominal = TrajectoryVocabulary::nominal(goal, scene.ego.velocity.norm(), kHorizon, cfg.dt);
  const worldsim::Pose pose = worldsim::imagined_pose(scene, short_waypoint);
  Trajectory in_grid;
  in_grid.step_s = nominal.step_s;
  for (const Vec2& p : nominal.points) in_grid.points.push_back(worldsim::to_frame(p, pose));
  r.conflicts = worldsim::corridor_conflicts(grid, in_grid, cfg.refine.halfwidth,
                                             worldsim::to_frame(scene.ego.position, pose));
  for (int h = 0; h < kHorizon; ++h) {
    const double d = r.conflicts[static_cast<std::size_t>(h)].distance;
    r.features(h) = std::min(d, cfg.reflection_cap) / cfg.reflection_cap;
    if (std::isfinite(d)) r.features(kHorizon) = 1.0;
  }
  return r;
}

namespace {

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string perception_text(const Scene& scene) {
  std::vector<const AgentState*> agents;
  for (const AgentState& a : scene.agents) agents.push_back(&a);
  std::sort(agents.begin(), agents.end(), [&](const AgentState* x, const AgentState* y) {
    return (x->position - scene.ego.position).norm() < (y->position - scene.ego.position).norm();
  });
  std::ostringstream os;
  os << "ego speed " << fmt1(scene.ego.velocity.norm()) << " m/s; " << agents.size() << " agents";
  for (const AgentState* a : agents) {
    os << "; " << to_string(a->kind) << " at (" << fmt1(a->position.x()) << ", " << fmt1(a->position.y())
       << ") moving (" << fmt1(a->velocity.x()) << ", " << fmt1(a->velocity.y()) << ")";
  }
  os << "; " << scene.boundaries.size() << " boundaries";
  return os.str();
}

std::string think_text(const Reflection& r, const worldsim::OccupancyGrid* grid) {
  std::ostringstream os;
  if (grid) {
    int occupied = 0;
    for (std::uint8_t c : grid->cells) occupied += c != 0 && c != static_cast<std::uint8_t>(worldsim::CellClass::kEgo);
    os << "imagined frame shows " << occupied << " occupied cells. ";
  }
  for (const worldsim::Conflict& c : r.conflicts) {
    if (c.any()) {
      os << "conflict along the nominal path at step " << c.step + 1 << " (" << fmt1(0.5 * (c.step + 1))
         << " s), obstacle " << fmt1(c.distance) << " m from the waypoint; slow down before it.";
      return os.str();
    }
  }
  os << "corridor clear for 3 s; keep the plan.";
  return os.str();
}

// ---------------------------------------------------------------------------
// Heads

HeadDistributions distributions(const PolicyParams& params, const HeadInputs& in) {
  HeadDistributions d;
  const Eigen::Index v = params.gen_bias.size();
  d.gen.resize(v, v);
  for (Eigen::Index j = 0; j < v; ++j) d.gen.col(j) = softmax(params.gen_weight.col(j) + params.gen_bias);
  d.act = softmax(params.act_weight * in.act_input);
  const auto horizon = static_cast<Eigen::Index>(params.traj_weight.size());
  d.traj.resize(kTrajVocab, horizon);
  for (Eigen::Index h = 0; h < horizon; ++h) {
    d.traj.col(h) = softmax(params.traj_weight[static_cast<std::size_t>(h)] * in.traj_input);
  }
  return d;
}

PolicyParams backprop(const PolicyParams& shape, const HeadInputs& in, const LogitGrads& g) {
  PolicyParams grad = PolicyParams::zeros(static_cast<int>(shape.gen_bias.size()),
                                          static_cast<int>(shape.traj_weight.size()));
  if (in.has_generation) {
    grad.gen_weight = g.gen;
    grad.gen_bias = g.gen.rowwise().sum();
  }
  grad.act_weight = g.act * in.act_input.transpose();
  for (std::size_t h = 0; h < grad.traj_weight.size(); ++h) {
    grad.traj_weight[h] = g.traj.col(static_cast<Eigen::Index>(h)) * in.traj_input.transpose();
  }
  return grad;
}

Eigen::MatrixXd generation_logits(const PolicyParams& params, const worldsim::OccupancyGrid& imagined) {
  const Eigen::Index v = params.gen_bias.size();
  Eigen::MatrixXd logits(v, static_cast<Eigen::Index>(imagined.cells.size()));
  for (std::size_t c = 0; c < imagined.cells.size(); ++c) {
    logits.col(static_cast<Eigen::Index>(c)) = params.gen_weight.col(imagined.cells[c]) + params.gen_bias;
  }
  return logits;
}

namespace {

Eigen::VectorXd traj_input(const FeatureVector& scaled, const ReflectionFeatures& psi, const ActionLabel& action) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kTrajInputDim);
  x.head(kFeatureDim) = scaled;
  x.segment(kFeatureDim, kReflectionDim) = psi;
  x(kFeatureDim + kReflectionDim + static_cast<int>(action.lateral)) = 1.0;
  x(kFeatureDim + kReflectionDim + kNumLateral + static_cast<int>(action.longitudinal)) = 1.0;
  return x;
}

Eigen::VectorXd class_histogram(const worldsim::OccupancyGrid& g, int v) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(v);
  for (std::uint8_t c : g.cells) counts(c) += 1.0;
  return counts;
}

int argmax(const Eigen::VectorXd& p) {
  Eigen::Index i = 0;
  p.maxCoeff(&i);
  return static_cast<int>(i);
}

struct Prepared {
  FeatureVector phi;
  kinematics::ShortPrediction short_pred;
  worldsim::OccupancyGrid imagined;
  Vec2 frame_point = Vec2::Zero();
};

Prepared prepare(const Scene& scene, MissionGoal goal, const PolicyConfig& cfg) {
  Prepared p;
  p.phi = extract_features(scene, goal, cfg.pipeline.perception);
  p.short_pred = kinematics::predict(scene.ego_history, goal, cfg.kinematics, cfg.dt);
  if (cfg.pipeline.generation) {
    p.imagined = worldsim::imagine(scene, p.short_pred.waypoint, cfg.dt, cfg.grid, cfg.refine.ego);
    p.frame_point = p.short_pred.waypoint;
  } else {
    // Without imagination the reflection falls back to the current observation.
    p.imagined = worldsim::render_grid(scene, cfg.grid, cfg.refine.ego);
    p.frame_point = scene.ego.position;
  }
  return p;
}

}  // namespace

Rollout sample_rollout(const PolicyParams& params, const Scene& scene, MissionGoal goal, const PolicyConfig& cfg,
                       std::uint64_t stream, Decoding decoding) {
  Rng rng(stream);
  const bool greedy = decoding == Decoding::kGreedy;
  const Prepared prep = prepare(scene, goal, cfg);
  const int v = static_cast<int>(params.gen_bias.size());

  Rollout r;
  r.stream = stream;
  HeadInputs& in = r.inputs;
  in.has_generation = cfg.pipeline.generation;
  in.act_input = scaled_features(prep.phi);
  in.class_counts = Eigen::VectorXd::Zero(v);
  in.token_counts = Eigen::MatrixXd::Zero(v, v);

  // (3) imagination: tokens per cell from the generation head
  worldsim::OccupancyGrid evidence = prep.imagined;
  if (in.has_generation) {
    in.class_counts = class_histogram(prep.imagined, v);
    Eigen::MatrixXd probs(v, v), logp(v, v);
    for (int j = 0; j < v; ++j) {
      const Eigen::VectorXd z = params.gen_weight.col(j) + params.gen_bias;
      probs.col(j) = softmax(z);
      logp.col(j) = log_softmax(z);
    }
    r.sample.visual.tokens.resize(prep.imagined.cells.size());
    for (std::size_t c = 0; c < prep.imagined.cells.size(); ++c) {
      const int j = prep.imagined.cells[c];
      const int tok = greedy ? argmax(probs.col(j)) : rng.categorical(probs.col(j));
      r.sample.visual.tokens[c] = tok;
      in.token_counts(tok, j) += 1.0;
      r.logp_generation += logp(tok, j);
      evidence.cells[c] = static_cast<std::uint8_t>(tok);
    }
  }

  // (4) reflection on the generated frame
  const Reflection refl = reflect(scene, evidence, prep.frame_point, goal, cfg);

  // (5) action
  const Eigen::VectorXd act_logits = params.act_weight * in.act_input;
  const Eigen::VectorXd act_probs = softmax(act_logits);
  in.action_index = greedy ? argmax(act_probs) : rng.categorical(act_probs);
  r.logp_action = log_softmax(act_logits)(in.action_index);
  const ActionLabel action = ActionLabel::from_index(in.action_index);

  // (6) trajectory tokens
  in.traj_input = traj_input(in.act_input, refl.features, action);
  for (const Eigen::MatrixXd& w : params.traj_weight) {
    const Eigen::VectorXd z = w * in.traj_input;
    const Eigen::VectorXd p = softmax(z);
    const int tok = greedy ? argmax(p) : rng.categorical(p);
    in.traj_tokens.push_back(tok);
    r.logp_trajectory.push_back(log_softmax(z)(tok));
  }
  r.raw_trajectory = TrajectoryVocabulary::decode(in.traj_tokens, scene.ego.velocity.norm(), cfg.dt);

  r.sample.perception = cfg.pipeline.perception ? perception_text(scene) : "";
  r.sample.prediction = {prep.short_pred.waypoint, prep.short_pred.direction};
  r.sample.think = cfg.pipeline.reasoning ? think_text(refl, in.has_generation ? &evidence : nullptr) : "";
  r.sample.action = action;
  r.sample.answer = cfg.pipeline.reasoning
                        ? refine_trajectory(scene, evidence, prep.frame_point, r.raw_trajectory, cfg.refine)
                        : r.raw_trajectory;

  r.logp_total = r.logp_generation + r.logp_action;
  for (double l : r.logp_trajectory) r.logp_total += l;
  return r;
}

LogProbGrad logprob_and_grad(const PolicyParams& params, const HeadInputs& in) {
  const HeadDistributions d = distributions(params, in);
  const Eigen::Index v = params.gen_bias.size();
  LogProbGrad out;
  LogitGrads g;
  g.gen = Eigen::MatrixXd::Zero(v, v);
  if (in.has_generation) {
    for (Eigen::Index j = 0; j < v; ++j) {
      if (in.class_counts(j) == 0.0) continue;
      const Eigen::VectorXd lp = log_softmax(params.gen_weight.col(j) + params.gen_bias);
      for (Eigen::Index k = 0; k < v; ++k) {
        if (in.token_counts(k, j) != 0.0) out.logp_generation += in.token_counts(k, j) * lp(k);
      }
      g.gen.col(j) = in.token_counts.col(j) - in.class_counts(j) * d.gen.col(j);
    }
  }
  const Eigen::VectorXd act_lp = log_softmax(params.act_weight * in.act_input);
  out.logp_action = act_lp(in.action_index);
  g.act = -d.act;
  g.act(in.action_index) += 1.0;

  g.traj = -d.traj;
  for (std::size_t h = 0; h < in.traj_tokens.size(); ++h) {
    const int tok = in.traj_tokens[h];
    out.logp_trajectory += log_softmax(params.traj_weight[h] * in.traj_input)(tok);
    g.traj(tok, static_cast<Eigen::Index>(h)) += 1.0;
  }
  out.logp = out.logp_generation + out.logp_action + out.logp_trajectory;
  out.grad = backprop(params, in, g);
  return out;
}

double logprob(const PolicyParams& params, const HeadInputs& in) {
  double lp = 0.0;
  const Eigen::Index v = params.gen_bias.size();
  if (in.has_generation) {
    for (Eigen::Index j = 0; j < v; ++j) {
      if (in.class_counts(j) == 0.0) continue;
      const Eigen::VectorXd l = log_softmax(params.gen_weight.col(j) + params.gen_bias);
      for (Eigen::Index k = 0; k < v; ++k) {
        if (in.token_counts(k, j) != 0.0) lp += in.token_counts(k, j) * l(k);
      }
    }
  }
  lp += log_softmax(params.act_weight * in.act_input)(in.action_index);
  for (std::size_t h = 0; h < in.traj_tokens.size(); ++h) {
    lp += log_softmax(params.traj_weight[h] * in.traj_input)(in.traj_tokens[h]);
  }
  return lp;
}

HeadInputs rebuild_inputs(const Rollout& rollout, const Scene& scene, MissionGoal goal, const PolicyConfig& cfg) {
  const Prepared prep = prepare(scene, goal, cfg);
  const int v = cfg.grid.num_classes;
  HeadInputs in;
  in.has_generation = cfg.pipeline.generation;
  in.act_input = scaled_features(prep.phi);
  in.class_counts = Eigen::VectorXd::Zero(v);
  in.token_counts = Eigen::MatrixXd::Zero(v, v);
  worldsim::OccupancyGrid evidence = prep.imagined;
  if (in.has_generation) {
    in.class_counts = class_histogram(prep.imagined, v);
    evidence = worldsim::detokenize(rollout.sample.visual, cfg.grid);
    for (std::size_t c = 0; c < evidence.cells.size(); ++c) in.token_counts(evidence.cells[c], prep.imagined.cells[c]) += 1.0;
  }
  const Reflection refl = reflect(scene, evidence, prep.frame_point, goal, cfg);
  in.action_index = rollout.sample.action.index();
  in.traj_input = traj_input(in.act_input, refl.features, rollout.sample.action);
  in.traj_tokens = rollout.inputs.traj_tokens;
  return in;
}

LogProbGrad logprob_and_grad(const PolicyParams& params, const Rollout& rollout, const Scene& scene, MissionGoal goal,
                             const PolicyConfig& cfg) {
  return logprob_and_grad(params, rebuild_inputs(rollout, scene, goal, cfg));
}

HeadInputs teacher_inputs(const Scene& scene, MissionGoal goal, const grammar::StructuredSample& gt,
                          const PolicyConfig& cfg) {
  const int v = cfg.grid.num_classes;
  HeadInputs in;
  in.has_generation = cfg.pipeline.generation;
  in.act_input = scaled_features(extract_features(scene, goal, cfg.pipeline.perception));
  in.class_counts = Eigen::VectorXd::Zero(v);
  in.token_counts = Eigen::MatrixXd::Zero(v, v);
  Vec2 frame_point = gt.prediction.waypoint;
  worldsim::OccupancyGrid evidence(cfg.grid);
  if (in.has_generation) {
    const worldsim::OccupancyGrid imagined = worldsim::imagine(scene, frame_point, cfg.dt, cfg.grid, cfg.refine.ego);
    evidence = worldsim::detokenize(gt.visual, cfg.grid);
    in.class_counts = class_histogram(imagined, v);
    for (std::size_t c = 0; c < evidence.cells.size(); ++c) in.token_counts(evidence.cells[c], imagined.cells[c]) += 1.0;
  } else {
    frame_point = scene.ego.position;
    evidence = worldsim::render_grid(scene, cfg.grid, cfg.refine.ego);
  }
  const Reflection refl = reflect(scene, evidence, frame_point, goal, cfg);
  in.action_index = gt.action.index();
  in.traj_input = traj_input(in.act_input, refl.features, gt.action);
  in.traj_tokens = TrajectoryVocabulary::encode(gt.answer, scene.ego.velocity.norm());
  return in;
}

std::pair<double, PolicyParams> supervised_loss_and_grad(const PolicyParams& params,
                                                        const std::vector<HeadInputs>& batch, SupervisedMode mode) {
  require(!batch.empty(), "supervised batch must not be empty");
  const Eigen::Index v = params.gen_bias.size();
  PolicyParams total = PolicyParams::zeros(static_cast<int>(v), static_cast<int>(params.traj_weight.size()));
  double loss = 0.0;
  for (const HeadInputs& in : batch) {
    const HeadDistributions d = distributions(params, in);
    LogitGrads g;
    g.gen = Eigen::MatrixXd::Zero(v, v);
    g.act = Eigen::VectorXd::Zero(d.act.size());
    g.traj = Eigen::MatrixXd::Zero(d.traj.rows(), d.traj.cols());
    if (in.has_generation) {
      const double cells = in.class_counts.sum();
      for (Eigen::Index j = 0; j < v; ++j) {
        if (in.class_counts(j) == 0.0) continue;
        const Eigen::VectorXd lp = log_softmax(params.gen_weight.col(j) + params.gen_bias);
        loss -= in.token_counts.col(j).dot(lp) / cells;
        g.gen.col(j) = (in.class_counts(j) * d.gen.col(j) - in.token_counts.col(j)) / cells;
      }
    }
    if (mode == SupervisedMode::kFineTune) {
      loss -= std::log(d.act(in.action_index));
      g.act = d.act;
      g.act(in.action_index) -= 1.0;
      const double steps = static_cast<double>(in.traj_tokens.size());
      for (std::size_t h = 0; h < in.traj_tokens.size(); ++h) {
        const auto col = static_cast<Eigen::Index>(h);
        loss -= log_softmax(params.traj_weight[h] * in.traj_input)(in.traj_tokens[h]) / steps;
        g.traj.col(col) = d.traj.col(col) / steps;
        g.traj(in.traj_tokens[h], col) -= 1.0 / steps;
      }
    }
    total.axpy(1.0, backprop(params, in, g));
  }
  const double n = static_cast<double>(batch.size());
  PolicyParams mean = PolicyParams::zeros(static_cast<int>(v), static_cast<int>(params.traj_weight.size()));
  mean.axpy(1.0 / n, total);
  return {loss / n, mean};
}

SupervisedResult supervised_update(const PolicyParams& params, const std::vector<SupervisedExample>& batch, double lr,
                                   SupervisedMode mode, const PolicyConfig& cfg) {
  require(lr > 0.0, "learning rate must be positive");
  std::vector<HeadInputs> inputs;
  inputs.reserve(batch.size());
  for (const SupervisedExample& ex : batch) inputs.push_back(teacher_inputs(*ex.scene, ex.goal, *ex.target, cfg));
  auto [loss, grad] = supervised_loss_and_grad(params, inputs, mode);
  SupervisedResult out{params, loss, std::sqrt(grad.squared_norm())};
  if (mode == SupervisedMode::kPretrain) {
    out.params.gen_weight -= lr * grad.gen_weight;
    out.params.gen_bias -= lr * grad.gen_bias;
  } else {
    out.params.axpy(-lr, grad);
  }
  return out;
}

}  // namespace vwl::policy
