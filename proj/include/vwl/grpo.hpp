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

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "vwl/core.hpp"
#include "vwl/policy.hpp"
#include "vwl/rewards.hpp"

namespace vwl::grpo {

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_coef = 1e-2;
  double learning_rate = 0.05;
  int steps = 300;
  double advantage_eps = 1e-8;
  std::uint64_t seed = 0;
  /// Gradient steps taken on each sampled batch.
  int inner_epochs = 1;
  int prompts_per_step = 8;
  /// Rollout workers; results are merged in a fixed order.
  int threads = 1;

  void validate() const;
};

struct AdvantageSet {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

AdvantageSet advantages(const std::vector<double>& rewards, double eps = 1e-8);

double surrogate_term(double logp_new, double logp_old, double advantage, double clip_eps);

/// d surrogate / d logp_new.
double surrogate_slope(double logp_new, double logp_old, double advantage, double clip_eps);

/// KL(p || q) of two categorical distributions; terms with p_k = 0 vanish.
template <typename DerivedP, typename DerivedQ>
double categorical_kl(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  require(p.size() == q.size(), "categorical_kl needs equal-length distributions");
  double kl = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) > 0.0) kl += p(k) * (std::log(p(k)) - std::log(q(k)));
  }
  return std::max(kl, 0.0);
}

struct KlGrad {
  double value = 0.0;
  policy::PolicyParams grad;  // with respect to the new parameters
};

/// Exact KL(pi_new || pi_ref) summed over every distribution the rollout
/// sampled from: the action, each trajectory step and each generated cell.
double kl_exact(const policy::PolicyParams& params_new, const policy::PolicyParams& params_ref,
                const policy::HeadInputs& in);
KlGrad kl_and_grad(const policy::PolicyParams& params_new, const policy::PolicyParams& params_ref,
                   const policy::HeadInputs& in);

/// One RL prompt with the targets its rollouts are scored against.
struct Prompt {
  const Scene* scene = nullptr;
  MissionGoal goal = MissionGoal::kForward;
  rewards::RewardTarget target;
};

struct GroupBatch {
  const Prompt* prompt = nullptr;
  std::vector<policy::Rollout> rollouts;
  std::vector<rewards::RewardBreakdown> scores;
  std::vector<double> rewards;
  AdvantageSet advantage;
  /// Log-likelihood of each rollout under theta_old, recomputed from its head inputs.
  std::vector<double> logp_old;
};

/// Samples and scores one group. Stream ids derive from (seed, step, slot, member).
GroupBatch sample_group(const policy::PolicyParams& params, const Prompt& prompt, const policy::PolicyConfig& pcfg,
                        const rewards::RewardWeights& weights, const rewards::RewardShaping& shaping,
                        const GrpoConfig& cfg, int step, int slot);

struct StepStats {
  int step = 0;
  double mean_reward = 0.0;
  rewards::RewardBreakdown component_means;
  std::vector<double> prompt_reward_mean;
  std::vector<double> prompt_reward_std;
  double kl = 0.0;         // mean per rollout, at theta_old
  double grad_norm = 0.0;  // of the last inner epoch
  friend bool operator==(const StepStats&, const StepStats&) = default;
};

/// Objective value (mean surrogate minus kl_coef times mean KL) and its gradient.
struct Objective {
  double value = 0.0;
  double kl = 0.0;
  policy::PolicyParams grad;
};

Objective objective(const policy::PolicyParams& params, const policy::PolicyParams& ref_params,
                    const std::vector<GroupBatch>& groups, const GrpoConfig& cfg);

struct StepResult {
  policy::PolicyParams params;
  StepStats stats;
};

/// One GRPO update over `prompts` from the current parameters as theta_old.
/// Throws NumericalError on a non-finite gradient.
StepResult grpo_step(const policy::PolicyParams& params, const policy::PolicyParams& ref_params,
                     const std::vector<const Prompt*>& prompts, const policy::PolicyConfig& pcfg,
                     const rewards::RewardWeights& weights, const rewards::RewardShaping& shaping,
                     const GrpoConfig& cfg, int step);

/// Held-out scene used to track greedy-decoding L2 during training.
struct ProbeCase {
  const Scene* scene = nullptr;
  MissionGoal goal = MissionGoal::kForward;
  Trajectory gt;
};

double probe_l2(const policy::PolicyParams& params, const std::vector<ProbeCase>& probes,
                const policy::PolicyConfig& pcfg);

struct LogRow {
  int step = 0;
  double mean_reward = 0.0;
  rewards::RewardBreakdown components;
  double kl = 0.0;
  double grad_norm = 0.0;
  double probe_l2_avg = 0.0;
};

struct TrainResult {
  policy::PolicyParams params;
  std::vector<LogRow> log;
};

TrainResult train(const GrpoConfig& cfg, const std::vector<Prompt>& prompts, const std::vector<ProbeCase>& probes,
                  const policy::PolicyParams& initial, const policy::PolicyParams& ref_params,
                  const policy::PolicyConfig& pcfg, const rewards::RewardWeights& weights,
                  const rewards::RewardShaping& shaping = {});

inline constexpr const char* kLogHeader = "step,mean_reward,r_fmt,r_pred,r_vis,r_act,r_traj,kl,grad_norm,probe_l2_avg";

void write_log(std::ostream& os, const std::vector<LogRow>& rows);

}  // namespace vwl::grpo
