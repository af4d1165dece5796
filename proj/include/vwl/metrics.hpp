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
#include <vector>

#include <Eigen/Dense>

#include "vwl/core.hpp"
#include "vwl/worldsim.hpp"

namespace vwl::metrics {

/// Horizons reported by both protocols, as 1-based step counts at 0.5 s.
inline constexpr std::array<int, 3> kHorizonSteps = {2, 4, 6};

struct L2Report {
  std::vector<double> per_step;
  std::array<double, 3> stp3_at{};   // prefix mean up to 1 s, 2 s, 3 s
  std::array<double, 3> uniad_at{};  // value at 1 s, 2 s, 3 s
  double stp3_avg = 0.0;
  double uniad_avg = 0.0;
};

/// Builds both protocol views from a per-step series of length 6.
L2Report protocol_views(std::vector<double> per_step);

L2Report l2_report(const Trajectory& pred, const Trajectory& gt);

/// Collision flags of one predicted plan rolled through the true world.
struct CollisionTrace {
  std::vector<bool> per_step;
  bool any() const;
};

/// Steps the world with step_world and places the ego at each waypoint with
/// heading from the displacement since the previous waypoint.
CollisionTrace collision_trace(const Trajectory& pred, const Scene& scene, const EgoFootprint& ego = {});

struct CollisionReport {
  std::vector<double> per_step_rate;  // fraction of samples colliding at each step
  std::array<double, 3> stp3_at{};
  std::array<double, 3> uniad_at{};
  double stp3_avg = 0.0;
  double uniad_avg = 0.0;
  int colliding_samples = 0;
  int samples = 0;
};

CollisionReport collision_report(const std::vector<CollisionTrace>& traces, int horizon = kHorizon);

/// Seven one-vs-rest classes in this order.
inline constexpr std::array<const char*, 7> kActionClasses = {"forward", "left", "right", "keep",
                                                              "accelerate", "decelerate", "stop"};

/// Per-class F1; a class absent from both predictions and ground truth scores 1.
std::array<double, 7> action_f1(const std::vector<ActionLabel>& pred, const std::vector<ActionLabel>& gt);

/// Gaussian moments of a feature set.
struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline constexpr double kCovarianceShrinkage = 1e-6;

/// Fits mean and unbiased covariance of row-samples, plus shrinkage on the diagonal.
template <typename Derived>
Gaussian fit_gaussian(const Eigen::MatrixBase<Derived>& samples, double shrinkage = kCovarianceShrinkage) {
  require(samples.rows() >= 2, "need at least two samples to fit a Gaussian");
  Gaussian g;
  g.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  g.cov.diagonal().array() += shrinkage;
  return g;
}

/// Symmetric PSD square root through the eigendecomposition; throws NumericalError if not PSD.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2}).
double frechet_distance(const Gaussian& a, const Gaussian& b);

template <typename DerivedA, typename DerivedB>
double frechet_distance(const Eigen::MatrixBase<DerivedA>& set_a, const Eigen::MatrixBase<DerivedB>& set_b) {
  require(set_a.cols() == set_b.cols(), "feature sets must share a dimension");
  return frechet_distance(fit_gaussian(set_a), fit_gaussian(set_b));
}

/// Fixed random projection of one-hot occupancy cells to `dim` features.
class GridProjection {
 public:
  GridProjection(std::uint64_t seed, int dim, const worldsim::GridSpec& spec);
  /// Test hook: all-zero projection.
  static GridProjection zeros(int dim, const worldsim::GridSpec& spec);

  Eigen::VectorXd features(const worldsim::OccupancyGrid& grid) const;
  Eigen::MatrixXd features(const std::vector<worldsim::OccupancyGrid>& grids) const;
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  GridProjection(Eigen::MatrixXd m, const worldsim::GridSpec& spec) : matrix_(std::move(m)), spec_(spec) {}
  Eigen::MatrixXd matrix_;  // dim x (cells * classes)
  worldsim::GridSpec spec_;
};

inline constexpr int kDefaultFeatureDim = 64;
inline constexpr std::uint64_t kDefaultProjectionSeed = 20240917;

Eigen::VectorXd grid_features(const worldsim::OccupancyGrid& grid, std::uint64_t seed, int dim);

}  // namespace vwl::metrics
