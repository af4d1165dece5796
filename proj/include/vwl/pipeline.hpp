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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vwl/config.hpp"
#include "vwl/data.hpp"
#include "vwl/grpo.hpp"
#include "vwl/policy.hpp"

namespace vwl::pipeline {

enum class Toggle : std::uint8_t {
  kSkipPretrain = 0,
  kSkipSft,
  kSkipRl,
  kDropPerception,
  kDropGeneration,
  kDropReasoning,
  kZeroPred,
  kZeroVis,
  kZeroAct,
  kZeroTraj,
};
inline constexpr int kNumToggles = 10;
inline constexpr std::array<std::string_view, kNumToggles> kToggleNames = {
    "skip-pretrain",   "skip-sft",       "skip-rl",   "drop-perception", "drop-generation",
    "drop-reasoning",  "zero-pred",      "zero-vis",  "zero-act",        "zero-traj"};

std::optional<Toggle> parse_toggle(std::string_view name);

struct Toggles {
  std::array<bool, kNumToggles> on{};
  bool has(Toggle t) const { return on[static_cast<std::size_t>(t)]; }
  Toggles& set(Toggle t) {
    on[static_cast<std::size_t>(t)] = true;
    return *this;
  }
  bool any() const;
  std::string describe() const;
};

/// Configuration with the pipeline, reward and stage toggles applied.
RunConfig apply_toggles(RunConfig cfg, const Toggles& toggles);

struct Datasets {
  std::vector<data::DatasetRecord> train;
  std::vector<data::DatasetRecord> val;
};

Datasets split(const std::vector<data::DatasetRecord>& records);
std::string train_path(const RunConfig& cfg);
std::string val_path(const RunConfig& cfg);
Datasets load_datasets(const RunConfig& cfg);

// --- stages -----------------------------------------------------------------

struct EpochRow {
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double val_metric = 0.0;  // token accuracy for pretraining, action accuracy for fine-tuning
};

struct StageResult {
  policy::PolicyParams params;
  std::vector<EpochRow> log;
};

/// Generation-head training on teacher tokens.
StageResult run_pretrain(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init);
/// Imitation of the full structured samples.
StageResult run_sft(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init);

struct RlResult {
  policy::PolicyParams params;
  std::vector<grpo::LogRow> log;
};
/// GRPO from `init`, regularised toward `init`.
RlResult run_rl(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init);

/// pretrain -> sft -> rl from zero parameters, honouring skip toggles (already applied config).
policy::PolicyParams run_all(const RunConfig& cfg, const Toggles& toggles, const Datasets& d);

void write_epoch_log(std::ostream& os, const std::vector<EpochRow>& rows, std::string_view metric_name);

// --- evaluation ---------------------------------------------------------------

struct GenerationScore {
  double token_accuracy = 0.0;
  double frechet = 0.0;
};

/// Greedy generation of every record's future frame conditioned on its gt_short.
GenerationScore score_generation(const policy::PolicyParams& params, const std::vector<data::DatasetRecord>& records,
                                 const RunConfig& cfg);

struct EvalReport {
  std::vector<std::pair<std::string, double>> rows;
  double value(std::string_view metric) const;
};

/// Greedy rollouts on `records` scored with every metric.
EvalReport evaluate(const policy::PolicyParams& params, const std::vector<data::DatasetRecord>& records,
                    const RunConfig& cfg);
/// Same schema with ground-truth samples replayed as predictions.
EvalReport evaluate_ground_truth(const std::vector<data::DatasetRecord>& records, const RunConfig& cfg);

void write_report(std::ostream& os, const EvalReport& r);
void write_comparison(std::ostream& os, const EvalReport& variant, const EvalReport& baseline);

// --- plot data -----------------------------------------------------------------

/// One parsed log: column names (first is the step column) and numeric rows.
struct LogTable {
  std::string run;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

LogTable read_log(std::istream& is, const std::string& run);
/// Long-format series per metric: `step,run,value,mean,std`, mean/std across runs at each step.
std::vector<std::pair<std::string, std::string>> report_series(const std::vector<LogTable>& logs);

// --- commands ------------------------------------------------------------------

struct CommandOptions {
  std::optional<std::string> in;
  std::optional<std::string> out;
  std::optional<std::string> log;
  std::vector<std::string> logs;
  Toggles toggles;
  bool from_scratch = false;
};

void cmd_gen_data(const RunConfig& cfg);
void cmd_pretrain(const RunConfig& cfg, const CommandOptions& o);
void cmd_sft(const RunConfig& cfg, const CommandOptions& o);
void cmd_rl(const RunConfig& cfg, const CommandOptions& o);
void cmd_eval(const RunConfig& cfg, const CommandOptions& o);
void cmd_report(const RunConfig& cfg, const CommandOptions& o);
void cmd_ablate(const RunConfig& cfg, const CommandOptions& o);

}  // namespace vwl::pipeline
