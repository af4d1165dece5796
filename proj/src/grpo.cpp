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

#include "vwl/grpo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "vwl/grammar.hpp"
#include "vwl/metrics.hpp"
#include "vwl/random.hpp"

namespace vwl::grpo {

void GrpoConfig::validate() const {
  require(group_size >= 2, "group_size must be >= 2");
  require(clip_eps > 0.0 && clip_eps < 1.0, "clip_eps must lie in (0, 1)");
  require(kl_coef >= 0.0 && std::isfinite(kl_coef), "kl_coef must be >= 0");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  require(steps >= 0, "steps must be >= 0");
  require(advantage_eps > 0.0, "advantage_eps must be > 0");
  require(inner_epochs >= 1, "inner_epochs must be >= 1");
  require(prompts_per_step >= 1, "prompts_per_step must be >= 1");
  require(threads >= 1, "threads must be >= 1");
}

AdvantageSet advantages(const std::vector<double>& rewards, double eps) {
  require(rewards.size() >= 2, "advantages need at least two rewards");
  const auto n = static_cast<double>(rewards.size());
  // Centred on the first reward, so shifts cancel before any rounding.
  const double pivot = rewards.front();
  double centred_mean = 0.0;
  for (double r : rewards) centred_mean += r - pivot;
  centred_mean /= n;
  double var = 0.0;
  for (double r : rewards) var += ((r - pivot) - centred_mean) * ((r - pivot) - centred_mean);
  AdvantageSet a;
  a.mean = pivot + centred_mean;
  a.stddev = std::sqrt(var / n);
  const double denom = std::max(a.stddev, eps);
  a.values.reserve(rewards.size());
  for (double r : rewards) a.values.push_back(a.stddev > eps ? ((r - pivot) - centred_mean) / denom : 0.0);
  return a;
}

double surrogate_term(double logp_new, double logp_old, double advantage, double clip_eps) {
  const double r = std::exp(logp_new - logp_old);
  const double clipped = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(r * advantage, clipped * advantage);
}

double surrogate_slope(double logp_new, double logp_old, double advantage, double clip_eps) {
  const double r = std::exp(logp_new - logp_old);
  if (advantage > 0.0 && r > 1.0 + clip_eps) return 0.0;
  if (advantage < 0.0 && r < 1.0 - clip_eps) return 0.0;
  return r * advantage;
}

namespace {

// Adds weight * KL(softmax(zp) || softmax(zq)) and its logit gradient.
double kl_logits(const Eigen::VectorXd& zp, const Eigen::VectorXd& zq, double weight, Eigen::Ref<Eigen::VectorXd> g) {
  const Eigen::VectorXd lp = policy::log_softmax(zp);
  const Eigen::VectorXd lq = policy::log_softmax(zq);
  const Eigen::VectorXd p = lp.array().exp();
  const Eigen::VectorXd diff = lp - lq;
  const double kl = p.dot(diff);
  g += weight * p.cwiseProduct((diff.array() - kl).matrix());
  return weight * kl;
}

}  // namespace

KlGrad kl_and_grad(const policy::PolicyParams& pn, const policy::PolicyParams& pr, const policy::HeadInputs& in) {
  if (!pn.same_shape(pr)) throw ShapeError("kl between parameters of different shapes");
  const Eigen::Index v = pn.gen_bias.size();
  const auto horizon = static_cast<Eigen::Index>(pn.traj_weight.size());
  policy::LogitGrads g;
  g.gen = Eigen::MatrixXd::Zero(v, v);
  g.act = Eigen::VectorXd::Zero(kNumActions);
  g.traj = Eigen::MatrixXd::Zero(policy::kTrajVocab, horizon);
  double kl = 0.0;
  if (in.has_generation) {
    for (Eigen::Index j = 0; j < v; ++j) {
      if (in.class_counts(j) == 0.0) continue;
      kl += kl_logits(pn.gen_weight.col(j) + pn.gen_bias, pr.gen_weight.col(j) + pr.gen_bias, in.class_counts(j),
                      g.gen.col(j));
    }
  }
  kl += kl_logits(pn.act_weight * in.act_input, pr.act_weight * in.act_input, 1.0, g.act);
  for (std::size_t h = 0; h < in.traj_tokens.size(); ++h) {
    kl += kl_logits(pn.traj_weight[h] * in.traj_input, pr.traj_weight[h] * in.traj_input, 1.0,
                    g.traj.col(static_cast<Eigen::Index>(h)));
  }
  return {std::max(kl, 0.0), policy::backprop(pn, in, g)};
}

double kl_exact(const policy::PolicyParams& pn, const policy::PolicyParams& pr, const policy::HeadInputs& in) {
  return kl_and_grad(pn, pr, in).value;
}

GroupBatch sample_group(const policy::PolicyParams& params, const Prompt& prompt, const policy::PolicyConfig& pcfg,
                        const rewards::RewardWeights& weights, const rewards::RewardShaping& shaping,
                        const GrpoConfig& cfg, int step, int slot) {
  GroupBatch b;
  b.prompt = &prompt;
  for (int i = 0; i < cfg.group_size; ++i) {
    const std::uint64_t stream = derive_seed(cfg.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(slot),
                                             static_cast<std::uint64_t>(i));
    policy::Rollout r = policy::sample_rollout(params, *prompt.scene, prompt.goal, pcfg, stream);
    const rewards::RewardBreakdown s =
        rewards::score(grammar::serialize(r.sample), prompt.target, weights, shaping);
    b.logp_old.push_back(policy::logprob(params, r.inputs));
    b.rewards.push_back(s.total);
    b.scores.push_back(s);
    b.rollouts.push_back(std::move(r));
  }
  b.advantage = advantages(b.rewards, cfg.advantage_eps);
  return b;
}

Objective objective(const policy::PolicyParams& params, const policy::PolicyParams& ref_params,
                    const std::vector<GroupBatch>& groups, const GrpoConfig& cfg) {
  Objective obj;
  obj.grad = policy::PolicyParams::zeros(static_cast<int>(params.gen_bias.size()),
                                         static_cast<int>(params.traj_weight.size()));
  double n = 0.0;
  for (const GroupBatch& b : groups) {
    for (std::size_t i = 0; i < b.rollouts.size(); ++i) {
      const policy::HeadInputs& in = b.rollouts[i].inputs;
      const double a = b.advantage.values[i];
      if (a != 0.0) {
        const policy::LogProbGrad lg = policy::logprob_and_grad(params, in);
        obj.value += surrogate_term(lg.logp, b.logp_old[i], a, cfg.clip_eps);
        obj.grad.axpy(surrogate_slope(lg.logp, b.logp_old[i], a, cfg.clip_eps), lg.grad);
      }
      if (cfg.kl_coef > 0.0) {
        const KlGrad kg = kl_and_grad(params, ref_params, in);
        obj.kl += kg.value;
        obj.value -= cfg.kl_coef * kg.value;
        obj.grad.axpy(-cfg.kl_coef, kg.grad);
      }
      n += 1.0;
    }
  }
  if (n > 0.0) {
    obj.value /= n;
    obj.kl /= n;
    policy::PolicyParams scaled = policy::PolicyParams::zeros(static_cast<int>(params.gen_bias.size()),
                                                              static_cast<int>(params.traj_weight.size()));
    scaled.axpy(1.0 / n, obj.grad);
    obj.grad = std::move(scaled);
  }
  return obj;
}

StepResult grpo_step(const policy::PolicyParams& params, const policy::PolicyParams& ref_params,
                     const std::vector<const Prompt*>& prompts, const policy::PolicyConfig& pcfg,
                     const rewards::RewardWeights& weights, const rewards::RewardShaping& shaping,
                     const GrpoConfig& cfg, int step) {
  cfg.validate();
  weights.validate();
  if (!params.same_shape(ref_params)) throw ShapeError("policy and reference parameters differ in shape");

  std::vector<GroupBatch> groups(prompts.size());
  const int workers = std::min<int>(cfg.threads, static_cast<int>(prompts.size()));
  if (workers <= 1) {
    for (std::size_t s = 0; s < prompts.size(); ++s) {
      groups[s] = sample_group(params, *prompts[s], pcfg, weights, shaping, cfg, step, static_cast<int>(s));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = next++; s < prompts.size(); s = next++) {
            groups[s] = sample_group(params, *prompts[s], pcfg, weights, shaping, cfg, step, static_cast<int>(s));
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  StepResult out{params, {}};
  out.stats.step = step;
  for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    const Objective obj = objective(out.params, ref_params, groups, cfg);
    if (!obj.grad.all_finite()) {
      throw NumericalError("non-finite GRPO gradient at step " + std::to_string(step) + ", epoch " +
                           std::to_string(epoch));
    }
    if (epoch == 0) out.stats.kl = obj.kl;
    out.stats.grad_norm = std::sqrt(obj.grad.squared_norm());
    out.params.axpy(cfg.learning_rate, obj.grad);
  }

  double n = 0.0;
  rewards::RewardBreakdown& m = out.stats.component_means;
  for (const GroupBatch& b : groups) {
    out.stats.prompt_reward_mean.push_back(b.advantage.mean);
    out.stats.prompt_reward_std.push_back(b.advantage.stddev);
    for (const rewards::RewardBreakdown& s : b.scores) {
      m.fmt += s.fmt;
      m.pred += s.pred;
      m.vis += s.vis;
      m.act += s.act;
      m.traj += s.traj;
      m.total += s.total;
      n += 1.0;
    }
  }
  if (n > 0.0) {
    m.fmt /= n;
    m.pred /= n;
    m.vis /= n;
    m.act /= n;
    m.traj /= n;
    m.total /= n;
  }
  out.stats.mean_reward = m.total;
  return out;
}

double probe_l2(const policy::PolicyParams& params, const std::vector<ProbeCase>& probes,
                const policy::PolicyConfig& pcfg) {
  if (probes.empty()) return 0.0;
  double sum = 0.0;
  for (const ProbeCase& p : probes) {
    const policy::Rollout r = policy::sample_rollout(params, *p.scene, p.goal, pcfg, 0, policy::Decoding::kGreedy);
    sum += metrics::l2_report(r.sample.answer, p.gt).stp3_avg;
  }
  return sum / static_cast<double>(probes.size());
}

TrainResult train(const GrpoConfig& cfg, const std::vector<Prompt>& prompts, const std::vector<ProbeCase>& probes,
                  const policy::PolicyParams& initial, const policy::PolicyParams& ref_params,
                  const policy::PolicyConfig& pcfg, const rewards::RewardWeights& weights,
                  const rewards::RewardShaping& shaping) {
  cfg.validate();
  TrainResult out{initial, {}};
  if (cfg.steps == 0) return out;
  require(!prompts.empty(), "GRPO training needs at least one prompt");

  std::vector<std::size_t> order(prompts.size());
  std::size_t cursor = order.size();
  int epoch = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<const Prompt*> batch;
    while (static_cast<int>(batch.size()) < cfg.prompts_per_step) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, 0x5348554646ULL, static_cast<std::uint64_t>(epoch++)));
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        }
        cursor = 0;
      }
      batch.push_back(&prompts[order[cursor++]]);
    }
    StepResult r = grpo_step(out.params, ref_params, batch, pcfg, weights, shaping, cfg, step);
    out.params = std::move(r.params);
    LogRow row;
    row.step = step;
    row.mean_reward = r.stats.mean_reward;
    row.components = r.stats.component_means;
    row.kl = r.stats.kl;
    row.grad_norm = r.stats.grad_norm;
    row.probe_l2_avg = probe_l2(out.params, probes, pcfg);
    out.log.push_back(row);
  }
  return out;
}

void write_log(std::ostream& os, const std::vector<LogRow>& rows) {
  os << kLogHeader << '\n';
  char buf[256];
  for (const LogRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.mean_reward,
                  r.components.fmt, r.components.pred, r.components.vis, r.components.act, r.components.traj, r.kl,
                  r.grad_norm, r.probe_l2_avg);
    os << buf;
  }
}

}  // namespace vwl::grpo
