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

#include <optional>
#include <set>
#include <string_view>

#include "vwl/core.hpp"
#include "vwl/grammar.hpp"
#include "vwl/worldsim.hpp"

namespace vwl::rewards {

struct RewardWeights {
  double fmt = 1.0;
  double pred = 1.0;
  double vis = 0.5;
  double act = 1.0;
  double traj = 2.0;

  void validate() const;
  double sum() const { return fmt + pred + vis + act + traj; }
};

/// Length scales of the exponential shaping.
struct RewardShaping {
  double sigma_pred = 0.5;   // m
  double sigma_traj = 1.0;   // m
  double sigma_jerk = 2.0;   // m/s^3
  double heading_threshold_deg = 10.0;
};

struct RewardBreakdown {
  double fmt = 0.0, pred = 0.0, vis = 0.0, act = 0.0, traj = 0.0;
  double total = 0.0;
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double r_format(std::string_view text, const grammar::ParseOptions& opts = {});

double r_pred(const grammar::ShortTermPrediction& predicted, const grammar::ShortTermPrediction& gt,
              const Trajectory& final_traj, double sigma);

double r_visual(const worldsim::TokenSequence& tokens, int required_len, const worldsim::Codebook& codebook);

/// Set view of an action label: lateral values 0..2, longitudinal values 3..6.
std::set<int> action_set(const ActionLabel& a);
/// F1 between two label sets. Both empty scores 1, exactly one empty scores 0.
double set_f1(const std::set<int>& pred, const std::set<int>& gt);
double r_action(const ActionLabel& pred, const ActionLabel& gt);

/// exp(-ADE / sigma_t) * exp(-mean jerk / sigma_j). Throws PreconditionError on length mismatch.
double r_traj(const Trajectory& traj, const Trajectory& gt, const Vec2& v0, const Vec2& a0, double sigma_t,
              double sigma_j);

double total_reward(const RewardBreakdown& b, const RewardWeights& w);

/// Ground truth a rollout is scored against.
struct RewardTarget {
  grammar::ShortTermPrediction gt_short;
  ActionLabel gt_action;
  Trajectory gt_trajectory;
  Vec2 v0 = Vec2::Zero();
  Vec2 a0 = Vec2::Zero();
  int required_tokens = 1024;
  int codebook_size = 8;
};

/// Scores raw model text. The format component is all-or-nothing; every
/// other component is computed from whatever segments parse on their own and
/// scores 0 when its segment is missing or malformed.
RewardBreakdown score(std::string_view text, const RewardTarget& target, const RewardWeights& w,
                      const RewardShaping& shaping = {});

}  // namespace vwl::rewards
