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

#include "vwl/metrics.hpp"

#include <gtest/gtest.h>

#include "scenes.hpp"
#include "vwl/random.hpp"

namespace vwl::metrics {
namespace {

using testing::cruising_scene;
using testing::straight;
using testing::vehicle;

TEST(L2, ProtocolViews) {
  const L2Report r = protocol_views({1, 2, 3, 4, 5, 6});
  EXPECT_EQ(r.stp3_at, (std::array<double, 3>{1.5, 2.5, 3.5}));
  EXPECT_EQ(r.uniad_at, (std::array<double, 3>{2, 4, 6}));
  EXPECT_DOUBLE_EQ(r.stp3_avg, 2.5);
  EXPECT_DOUBLE_EQ(r.uniad_avg, 4.0);
  EXPECT_THROW(protocol_views({1, 2}), PreconditionError);
}

TEST(L2, PerStepDistances) {
  const Trajectory gt = straight(4.0);
  Trajectory pred = gt;
  for (std::size_t i = 0; i < pred.points.size(); ++i) pred.points[i] += Vec2(0.0, 0.5 * static_cast<double>(i));
  const L2Report r = l2_report(pred, gt);
  EXPECT_DOUBLE_EQ(r.per_step[5], 2.5);
  EXPECT_DOUBLE_EQ(r.uniad_at[0], 0.5);
  EXPECT_DOUBLE_EQ(l2_report(gt, gt).stp3_avg, 0.0);
  pred.points.pop_back();
  EXPECT_THROW(l2_report(pred, gt), PreconditionError);
}

TEST(Collision, TraceAgainstStationaryVehicle) {
  Scene s = cruising_scene(5.0);
  s.agents.push_back(vehicle(1, {0.0, 10.0}));
  const CollisionTrace t = collision_trace(straight(5.0), s);
  // By the last step the ego box (12.96..17.04) is past the vehicle (8..12).
  EXPECT_EQ(t.per_step, (std::vector<bool>{false, false, true, true, true, false}));
  EXPECT_TRUE(t.any());
  EXPECT_FALSE(collision_trace(straight(1.0), s).any());
}

TEST(Collision, WorldMovesWithThePlan) {
  Scene s = cruising_scene(5.0);
  // Oncoming in the ego lane: reaches the ego within two steps.
  s.agents.push_back(vehicle(1, {0.0, 16.0}, {0.0, -10.0}));
  const CollisionTrace t = collision_trace(straight(0.0), s);
  EXPECT_FALSE(t.per_step[0]);
  EXPECT_TRUE(t.per_step[2]);
}

TEST(Collision, ReportRates) {
  std::vector<CollisionTrace> traces(4);
  for (auto& t : traces) t.per_step.assign(6, false);
  traces[0].per_step[1] = true;
  traces[0].per_step[5] = true;
  traces[1].per_step[5] = true;
  const CollisionReport r = collision_report(traces);
  EXPECT_EQ(r.colliding_samples, 2);
  EXPECT_EQ(r.samples, 4);
  EXPECT_EQ(r.per_step_rate, (std::vector<double>{0, 0.25, 0, 0, 0, 0.5}));
  EXPECT_DOUBLE_EQ(r.uniad_at[2], 0.5);
  EXPECT_DOUBLE_EQ(r.stp3_at[0], 0.125);
  traces[2].per_step.pop_back();
  EXPECT_THROW(collision_report(traces), PreconditionError);
}

TEST(ActionF1, PerClass) {
  const std::vector<ActionLabel> gt = {{Lateral::kForward, Longitudinal::kKeep}, {Lateral::kLeft, Longitudinal::kStop}};
  const auto perfect = action_f1(gt, gt);
  for (double f : perfect) EXPECT_DOUBLE_EQ(f, 1.0);

  const std::vector<ActionLabel> pred = {{Lateral::kForward, Longitudinal::kStop}, {Lateral::kLeft, Longitudinal::kStop}};
  const auto f = action_f1(pred, gt);
  EXPECT_DOUBLE_EQ(f[0], 1.0);        // forward
  EXPECT_DOUBLE_EQ(f[3], 0.0);        // keep: one miss
  EXPECT_NEAR(f[6], 2.0 / 3.0, 1e-15);  // stop: tp 1, fp 1
  EXPECT_DOUBLE_EQ(f[4], 1.0);        // accelerate never appears
  EXPECT_THROW(action_f1(pred, {}), PreconditionError);
}

TEST(Frechet, ClosedFormOneDimensional) {
  Gaussian a{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  Gaussian b{Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
  EXPECT_NEAR(frechet_distance(a, b), 4.0 + 1.0 + 4.0 - 4.0, 1e-12);
  EXPECT_NEAR(frechet_distance(a, a), 0.0, 1e-12);
  EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-12);
}

TEST(Frechet, SetProperties) {
  Rng rng(1);
  Eigen::MatrixXd x(200, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  EXPECT_NEAR(frechet_distance(x, x), 0.0, 1e-9);
  Eigen::VectorXd c(5);
  c << 1, -2, 0.5, 0, 3;
  const Eigen::MatrixXd shifted = x.rowwise() + c.transpose();
  EXPECT_NEAR(frechet_distance(x, shifted), c.squaredNorm(), 1e-8);
  EXPECT_GT(frechet_distance(x, 2.0 * x), 0.5);
  EXPECT_THROW(frechet_distance(x, Eigen::MatrixXd(x.leftCols(3))), PreconditionError);
  EXPECT_THROW(fit_gaussian(Eigen::MatrixXd(x.topRows(1))), PreconditionError);
}

TEST(Frechet, RejectsIndefiniteCovariance) {
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1;
  EXPECT_THROW(psd_sqrt(m), NumericalError);
  Eigen::Matrix2d spd;
  spd << 4, 1, 1, 3;
  const Eigen::MatrixXd r = psd_sqrt(spd);
  EXPECT_LT((r * r - spd).norm(), 1e-12);
}

TEST(GridFeatures, FixedProjection) {
  const worldsim::GridSpec spec;
  Scene s = cruising_scene();
  const worldsim::OccupancyGrid empty = worldsim::render_grid(s, spec);
  s.agents.push_back(vehicle(1, {0.0, 8.0}));
  const worldsim::OccupancyGrid busy = worldsim::render_grid(s, spec);

  const Eigen::VectorXd f = grid_features(busy, kDefaultProjectionSeed, kDefaultFeatureDim);
  EXPECT_EQ(f.size(), kDefaultFeatureDim);
  EXPECT_EQ(f, grid_features(busy, kDefaultProjectionSeed, kDefaultFeatureDim));
  EXPECT_NE(f, grid_features(empty, kDefaultProjectionSeed, kDefaultFeatureDim));
  EXPECT_NE(f, grid_features(busy, kDefaultProjectionSeed + 1, kDefaultFeatureDim));
  EXPECT_EQ(GridProjection::zeros(4, spec).features(busy), Eigen::VectorXd::Zero(4));

  const GridProjection proj(3, 16, spec);
  const Eigen::MatrixXd rows = proj.features(std::vector<worldsim::OccupancyGrid>{empty, busy});
  EXPECT_EQ(rows.row(1).transpose(), proj.features(busy));
  worldsim::GridSpec other;
  other.cells_per_side = 16;
  EXPECT_THROW(proj.features(worldsim::OccupancyGrid(other)), PreconditionError);
}

}  // namespace
}  // namespace vwl::metrics
