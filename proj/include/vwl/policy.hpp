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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vwl/core.hpp"
#include "vwl/grammar.hpp"
#include "vwl/kinematics.hpp"
#include "vwl/worldsim.hpp"

namespace vwl::policy {

// Feature layout: [speed, |a_hist|, goal one-hot (3), 8 sector distances, bias].
inline constexpr int kFeatureDim = 14;
inline constexpr int kNumSectors = 8;
inline constexpr double kSectorCap = 16.0;
inline constexpr int kReflectionDim = kHorizon + 1;
inline constexpr int kTrajInputDim = kFeatureDim + kReflectionDim + kNumLateral + kNumLongitudinal;
inline constexpr int kTrajVocab = 15;

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
using ReflectionFeatures = Eigen::Matrix<double, kReflectionDim, 1>;

/// Numerically stable softmax of a logit vector.
template <typename Derived>
Eigen::VectorXd softmax(const Eigen::MatrixBase<Derived>& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Derived>
Eigen::VectorXd log_softmax(const Eigen::MatrixBase<Derived>& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

/// Sector of a point relative to the ego: 0 straight ahead, counter-clockwise in 45 degree steps.
int sector_of(const Vec2& p);

/// `perception = false` blinds the sector channels (all at the cap).
FeatureVector extract_features(const Scene& scene, MissionGoal goal, bool perception = true);

/// Fixed scaling applied to the feature vector before every linear head.
FeatureVector scaled_features(const FeatureVector& phi);

/// Discrete trajectory vocabulary: 5 acceleration levels x 3 yaw increments.
struct TrajectoryVocabulary {
  static constexpr std::array<double, 5> kAccelLevels = {-4.0, -2.0, 0.0, 1.0, 2.0};
  static constexpr int kKeepAccelIndex = 2;
  /// Per-step yaw increment of a left/right token (radians).
  static double yaw_step();

  static int token(int accel_index, Lateral curvature) { return accel_index * kNumLateral + static_cast<int>(curvature); }
  static int accel_index(int token) { return token / kNumLateral; }
  static Lateral curvature(int token) { return static_cast<Lateral>(token % kNumLateral); }

  /// Integrates tokens from the ego origin at initial speed `v0`, heading +y.
  static Trajectory decode(const std::vector<int>& tokens, double v0, double dt = kStepSeconds);
  /// Greedy nearest-token encoding. Exact for `decode` output while the speed
  /// stays positive; at rest every curvature lands on the same point.
  static std::vector<int> encode(const Trajectory& traj, double v0);
  /// Constant-speed reference path following the goal curvature.
  static Trajectory nominal(MissionGoal goal, double v0, int horizon = kHorizon, double dt = kStepSeconds);
};

/// Learnable parameters of the three heads.
struct PolicyParams {
  Eigen::MatrixXd gen_weight;                // V x V, column j holds logits contribution of input class j
  Eigen::VectorXd gen_bias;                  // V
  Eigen::MatrixXd act_weight;                // 12 x kFeatureDim
  std::vector<Eigen::MatrixXd> traj_weight;  // kHorizon x (15 x kTrajInputDim)

  static PolicyParams zeros(int num_classes = 8, int horizon = kHorizon);

  Eigen::Index size() const;
  Eigen::VectorXd to_vector() const;
  void from_vector(const Eigen::VectorXd& v);
  bool same_shape(const PolicyParams& other) const;
  /// this += alpha * other
  PolicyParams& axpy(double alpha, const PolicyParams& other);
  double squared_norm() const;
  bool all_finite() const;

  friend bool operator==(const PolicyParams& a, const PolicyParams& b);
};

/// Checkpoint I/O (plain text, versioned, shape headers, round-trip exact).
void write_checkpoint(std::ostream& os, const PolicyParams& p);
PolicyParams read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const PolicyParams& p);
PolicyParams load_checkpoint(const std::string& path);

struct PipelineOptions {
  bool perception = true;
  bool generation = true;
  bool reasoning = true;
};

struct RefineConfig {
  double safety_margin = 0.5;
  double halfwidth = worldsim::default_corridor_halfwidth();
  EgoFootprint ego;
  /// Only waypoints before this step contribute conflicts.
  int lookahead_steps = kHorizon;
};

struct PolicyConfig {
  kinematics::FusionConfig kinematics;
  worldsim::GridSpec grid;
  RefineConfig refine;
  PipelineOptions pipeline;
  /// Conflict distances are capped here before normalisation to [0, 1].
  double reflection_cap = 8.0;
  double dt = kStepSeconds;
};

/// Slow-down-before-conflict refinement. `grid` is the frame seen from the
/// pose reached at `short_waypoint`; `initial` is in the current ego frame.
Trajectory refine_trajectory(const Scene& scene, const worldsim::OccupancyGrid& grid, const Vec2& short_waypoint,
                             const Trajectory& initial, const RefineConfig& cfg);

/// Reflection evidence for a plan: per-step conflict distances and an any-conflict flag.
struct Reflection {
  ReflectionFeatures features = ReflectionFeatures::Ones();
  std::vector<worldsim::Conflict> conflicts;
};
Reflection reflect(const Scene& scene, const worldsim::OccupancyGrid& grid, const Vec2& short_waypoint,
                   MissionGoal goal, const PolicyConfig& cfg);

/// Templated scene description for the perception segment.
std::string perception_text(const Scene& scene);
/// Templated reflection summary for the think segment; a non-null `grid` adds an occupancy count.
std::string think_text(const Reflection& r, const worldsim::OccupancyGrid* grid);

/// Everything the heads consume for one rollout; independent of the parameters.
struct HeadInputs {
  bool has_generation = true;
  Eigen::VectorXd class_counts;   // V: cells of each imagined class
  Eigen::MatrixXd token_counts;   // V x V: (emitted token, imagined class)
  Eigen::VectorXd act_input;      // scaled features
  Eigen::VectorXd traj_input;     // kTrajInputDim
  int action_index = 0;
  std::vector<int> traj_tokens;
};

/// Per-head logit gradients (or any per-logit quantity) aggregated per distinct input.
struct LogitGrads {
  Eigen::MatrixXd gen;   // V x V, column j for input class j
  Eigen::VectorXd act;   // 12
  Eigen::MatrixXd traj;  // 15 x H
};

struct HeadDistributions {
  Eigen::MatrixXd gen;   // V x V, column j = softmax for input class j
  Eigen::VectorXd act;   // 12
  Eigen::MatrixXd traj;  // 15 x H
};

HeadDistributions distributions(const PolicyParams& params, const HeadInputs& in);

/// Chain rule from logit gradients to parameter gradients through the linear heads.
PolicyParams backprop(const PolicyParams& shape, const HeadInputs& in, const LogitGrads& g);

/// Generation logits for every cell (V x num_cells).
Eigen::MatrixXd generation_logits(const PolicyParams& params, const worldsim::OccupancyGrid& imagined);

struct Rollout {
  grammar::StructuredSample sample;
  Trajectory raw_trajectory;
  HeadInputs inputs;
  double logp_generation = 0.0;
  double logp_action = 0.0;
  std::vector<double> logp_trajectory;
  double logp_total = 0.0;
  std::uint64_t stream = 0;
};

enum class Decoding { kSample, kGreedy };

Rollout sample_rollout(const PolicyParams& params, const Scene& scene, MissionGoal goal, const PolicyConfig& cfg,
                       std::uint64_t stream, Decoding decoding = Decoding::kSample);

struct LogProbGrad {
  double logp = 0.0;
  double logp_generation = 0.0, logp_action = 0.0, logp_trajectory = 0.0;
  PolicyParams grad;
};

/// Exact log-likelihood of a stored rollout and its gradient.
LogProbGrad logprob_and_grad(const PolicyParams& params, const HeadInputs& in);
/// Recomputes the head inputs from (scene, goal) before differentiating.
LogProbGrad logprob_and_grad(const PolicyParams& params, const Rollout& rollout, const Scene& scene, MissionGoal goal,
                             const PolicyConfig& cfg);
double logprob(const PolicyParams& params, const HeadInputs& in);

/// Rebuilds head inputs for a stored rollout (same tokens, action, trajectory tokens).
HeadInputs rebuild_inputs(const Rollout& rollout, const Scene& scene, MissionGoal goal, const PolicyConfig& cfg);

/// Head inputs of a ground-truth sample, used for imitation.
HeadInputs teacher_inputs(const Scene& scene, MissionGoal goal, const grammar::StructuredSample& gt,
                          const PolicyConfig& cfg);

enum class SupervisedMode { kPretrain, kFineTune };

struct SupervisedExample {
  const Scene* scene;
  MissionGoal goal;
  const grammar::StructuredSample* target;
};

struct SupervisedResult {
  PolicyParams params;
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// Mean cross-entropy and its gradient; generation is averaged per cell,
/// trajectory per step. Pretrain mode only touches the generation head.
std::pair<double, PolicyParams> supervised_loss_and_grad(const PolicyParams& params,
                                                        const std::vector<HeadInputs>& batch, SupervisedMode mode);

SupervisedResult supervised_update(const PolicyParams& params, const std::vector<SupervisedExample>& batch, double lr,
                                   SupervisedMode mode, const PolicyConfig& cfg);

}  // namespace vwl::policy
