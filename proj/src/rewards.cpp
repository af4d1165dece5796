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

#include "vwl/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "vwl/kinematics.hpp"

namespace vwl::rewards {

void RewardWeights::validate() const {
  for (double w : {fmt, pred, vis, act, traj}) require(w >= 0.0 && std::isfinite(w), "reward weights must be >= 0");
  require(sum() > 0.0, "reward weights must not all be zero");
}

double r_format(std::string_view text, const grammar::ParseOptions& opts) {
  return grammar::check_format(text, opts).valid ? 1.0 : 0.0;
}

double r_pred(const grammar::ShortTermPrediction& predicted, const grammar::ShortTermPrediction& gt,
              const Trajectory& final_traj, double sigma) {
  require(!final_traj.points.empty(), "r_pred needs a non-empty final trajectory");
  require(sigma > 0.0, "r_pred needs sigma > 0");
  const double accuracy = std::exp(-(predicted.waypoint - gt.waypoint).norm() / sigma);
  const double consistency = std::exp(-(predicted.waypoint - final_traj.points.front()).norm() / sigma);
  const double heading_match = predicted.direction == gt.direction ? 1.0 : 0.5;
  return heading_match * (0.5 * accuracy + 0.5 * consistency);
}

double r_visual(const worldsim::TokenSequence& tokens, int required_len, const worldsim::Codebook& codebook) {
  if (required_len <= 0 || tokens.tokens.size() != static_cast<std::size_t>(required_len)) return 0.0;
  const auto valid = std::count_if(tokens.tokens.begin(), tokens.tokens.end(),
                                   [&](std::int64_t t) { return codebook.valid(t); });
  return static_cast<double>(valid) / required_len;
}

std::set<int> action_set(const ActionLabel& a) {
  return {static_cast<int>(a.lateral), kNumLateral + static_cast<int>(a.longitudinal)};
}

double set_f1(const std::set<int>& pred, const std::set<int>& gt) {
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty()) return 0.0;
  const auto tp = static_cast<double>(std::count_if(pred.begin(), pred.end(), [&](int v) { return gt.count(v) > 0; }));
  if (tp == 0.0) return 0.0;
  const double precision = tp / static_cast<double>(pred.size());
  const double recall = tp / static_cast<double>(gt.size());
  return 2.0 * precision * recall / (precision + recall);
}

double r_action(const ActionLabel& pred, const ActionLabel& gt) { return set_f1(action_set(pred), action_set(gt)); }

double r_traj(const Trajectory& traj, const Trajectory& gt, const Vec2& v0, const Vec2& a0, double sigma_t,
              double sigma_j) {
  require(traj.points.size() == gt.points.size(), "r_traj needs trajectories of equal length");
  require(sigma_t > 0.0 && sigma_j > 0.0, "r_traj needs positive sigmas");
  double ade = 0.0;
  for (std::size_t i = 0; i < traj.points.size(); ++i) ade += (traj.points[i] - gt.points[i]).norm();
  ade /= static_cast<double>(traj.points.size());
  const std::vector<double> jerk = kinematics::jerk_profile(traj, v0, a0);
  double mean_jerk = 0.0;
  for (double j : jerk) mean_jerk += j;
  mean_jerk /= static_cast<double>(jerk.size());
  return std::exp(-ade / sigma_t) * std::exp(-mean_jerk / sigma_j);
}

double total_reward(const RewardBreakdown& b, const RewardWeights& w) {
  return w.fmt * b.fmt + w.pred * b.pred + w.vis * b.vis + w.act * b.act + w.traj * b.traj;
}

RewardBreakdown score(std::string_view text, const RewardTarget& target, const RewardWeights& w,
                      const RewardShaping& shaping) {
  const grammar::ParseOptions opts{target.gt_trajectory.size()};
  RewardBreakdown b;
  b.fmt = r_format(text, opts);
  const grammar::LenientSegments seg = grammar::extract_segments(text, opts);
  if (seg.prediction && seg.answer) b.pred = r_pred(*seg.prediction, target.gt_short, *seg.answer, shaping.sigma_pred);
  if (seg.visual) b.vis = r_visual(*seg.visual, target.required_tokens, worldsim::Codebook(target.codebook_size));
  if (seg.action) b.act = r_action(*seg.action, target.gt_action);
  if (seg.answer && seg.answer->size() >= 3) {
    b.traj = r_traj(*seg.answer, target.gt_trajectory, target.v0, target.a0, shaping.sigma_traj, shaping.sigma_jerk);
  }
  b.total = total_reward(b, w);
  return b;
}

}  // namespace vwl::rewards
