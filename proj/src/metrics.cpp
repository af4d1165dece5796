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

#include <cmath>

#include "vwl/random.hpp"

namespace vwl::metrics {

L2Report protocol_views(std::vector<double> per_step) {
  require(per_step.size() == static_cast<std::size_t>(kHorizon), "protocol views need 6 per-step values");
  L2Report r;
  r.per_step = std::move(per_step);
  for (std::size_t k = 0; k < kHorizonSteps.size(); ++k) {
    const int n = kHorizonSteps[k];
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += r.per_step[static_cast<std::size_t>(i)];
    r.stp3_at[k] = sum / n;
    r.uniad_at[k] = r.per_step[static_cast<std::size_t>(n - 1)];
  }
  r.stp3_avg = (r.stp3_at[0] + r.stp3_at[1] + r.stp3_at[2]) / 3.0;
  r.uniad_avg = (r.uniad_at[0] + r.uniad_at[1] + r.uniad_at[2]) / 3.0;
  return r;
}

L2Report l2_report(const Trajectory& pred, const Trajectory& gt) {
  require(pred.points.size() == gt.points.size(), "l2_report needs trajectories of equal length");
  require(pred.size() == kHorizon, "l2_report needs 6-step trajectories");
  std::vector<double> per_step;
  for (std::size_t i = 0; i < pred.points.size(); ++i) per_step.push_back((pred.points[i] - gt.points[i]).norm());
  return protocol_views(std::move(per_step));
}

bool CollisionTrace::any() const {
  for (bool b : per_step) if (b) return true;
  return false;
}

CollisionTrace collision_trace(const Trajectory& pred, const Scene& scene, const EgoFootprint& ego) {
  CollisionTrace trace;
  Scene world = scene;
  Vec2 prev = scene.ego.position;
  double heading = scene.ego.heading;
  for (const Vec2& p : pred.points) {
    world = worldsim::step_world(world, pred.step_s);
    heading = worldsim::heading_of(p - prev, heading);
    trace.per_step.push_back(worldsim::check_collision(world, {p, heading}, ego));
    prev = p;
  }
  return trace;
}

CollisionReport collision_report(const std::vector<CollisionTrace>& traces, int horizon) {
  CollisionReport r;
  r.samples = static_cast<int>(traces.size());
  r.per_step_rate.assign(static_cast<std::size_t>(horizon), 0.0);
  for (const CollisionTrace& t : traces) {
    require(t.per_step.size() == static_cast<std::size_t>(horizon), "collision trace length mismatch");
    if (t.any()) ++r.colliding_samples;
    for (int h = 0; h < horizon; ++h) {
      if (t.per_step[static_cast<std::size_t>(h)]) r.per_step_rate[static_cast<std::size_t>(h)] += 1.0;
    }
  }
  if (r.samples > 0) {
    for (double& v : r.per_step_rate) v /= r.samples;
  }
  if (horizon == kHorizon) {
    const L2Report views = protocol_views(r.per_step_rate);
    r.stp3_at = views.stp3_at;
    r.uniad_at = views.uniad_at;
    r.stp3_avg = views.stp3_avg;
    r.uniad_avg = views.uniad_avg;
  }
  return r;
}

std::array<double, 7> action_f1(const std::vector<ActionLabel>& pred, const std::vector<ActionLabel>& gt) {
  require(pred.size() == gt.size(), "action_f1 needs equal-length label lists");
  std::array<int, 7> tp{}, fp{}, fn{};
  auto classes_of = [](const ActionLabel& a) {
    return std::array<int, 2>{static_cast<int>(a.lateral), kNumLateral + static_cast<int>(a.longitudinal)};
  };
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = classes_of(pred[i]);
    const auto g = classes_of(gt[i]);
    for (int c = 0; c < 7; ++c) {
      const bool in_p = p[0] == c || p[1] == c;
      const bool in_g = g[0] == c || g[1] == c;
      if (in_p && in_g) ++tp[static_cast<std::size_t>(c)];
      else if (in_p) ++fp[static_cast<std::size_t>(c)];
      else if (in_g) ++fn[static_cast<std::size_t>(c)];
    }
  }
  std::array<double, 7> f1{};
  for (std::size_t c = 0; c < 7; ++c) {
    const int denom = 2 * tp[c] + fp[c] + fn[c];
    f1[c] = denom == 0 ? 1.0 : 2.0 * tp[c] / denom;
  }
  return f1;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::VectorXd ev = solver.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol) throw NumericalError("matrix is not positive semi-definite");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
}

double frechet_distance(const Gaussian& a, const Gaussian& b) {
  require(a.mean.size() == b.mean.size() && a.cov.rows() == b.cov.rows(), "Gaussian dimensions differ");
  const Eigen::MatrixXd sa = psd_sqrt(a.cov);
  psd_sqrt(b.cov);  // PSD check only
  Eigen::MatrixXd inner = sa * b.cov * sa;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = psd_sqrt(inner).trace();
  const double d = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

GridProjection::GridProjection(std::uint64_t seed, int dim, const worldsim::GridSpec& spec) : spec_(spec) {
  require(dim >= 1, "projection dimension must be >= 1");
  const int inputs = spec.num_cells() * spec.num_classes;
  matrix_.resize(dim, inputs);
  Rng rng(seed);
  for (int j = 0; j < inputs; ++j) {
    for (int i = 0; i < dim; ++i) matrix_(i, j) = rng.normal();
  }
}

GridProjection GridProjection::zeros(int dim, const worldsim::GridSpec& spec) {
  return GridProjection(Eigen::MatrixXd::Zero(dim, spec.num_cells() * spec.num_classes), spec);
}

Eigen::VectorXd GridProjection::features(const worldsim::OccupancyGrid& grid) const {
  require(grid.spec == spec_, "grid spec does not match the projection");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(matrix_.rows());
  const int classes = spec_.num_classes;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    f += matrix_.col(static_cast<Eigen::Index>(c) * classes + grid.cells[c]);
  }
  return f / std::sqrt(static_cast<double>(matrix_.cols()));
}

Eigen::MatrixXd GridProjection::features(const std::vector<worldsim::OccupancyGrid>& grids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grids.size()), matrix_.rows());
  for (std::size_t i = 0; i < grids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features(grids[i]).transpose();
  return out;
}

Eigen::VectorXd grid_features(const worldsim::OccupancyGrid& grid, std::uint64_t seed, int dim) {
  return GridProjection(seed, dim, grid.spec).features(grid);
}

}  // namespace vwl::metrics
