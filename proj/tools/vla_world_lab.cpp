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

// Command-line entry point: data generation, the three training stages,
// evaluation, ablations and plot-data emission.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vwl/config.hpp"
#include "vwl/data.hpp"
#include "vwl/grammar.hpp"
#include "vwl/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::string valid_toggles() {
  std::string s;
  for (std::string_view t : vwl::pipeline::kToggleNames) s += (s.empty() ? "" : ", ") + std::string(t);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("vla-world-lab");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("VLA_WORLD_LOG")) spdlog::cfg::helpers::load_levels(level);

  CLI::App app{"VLA-World lab: imagine, reflect, plan in a synthetic 2D driving world"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  vwl::pipeline::CommandOptions opts;
  std::vector<std::string> toggles;
  std::string in, out, log;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "generate the synthetic train/val datasets"},
      {"pretrain", "train the generation head on teacher tokens"},
      {"sft", "supervised fine-tuning on ground-truth samples"},
      {"rl", "GRPO reinforcement learning"},
      {"eval", "evaluate a checkpoint on the validation split"},
      {"report", "turn training logs into per-metric plot data"},
      {"ablate", "train a toggled pipeline variant and compare it with the baseline"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "config file (key = value)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--in", in, "input checkpoint");
    sub->add_option("--out", out, "output checkpoint, report file or directory");
    sub->add_option("--log", log, "training log path (report: input log, repeatable)");
    sub->add_option("--toggle", toggles, "pipeline toggle, repeatable");
    if (name == "report") sub->add_option("--logs", opts.logs, "additional input logs");
    if (name == "rl") sub->add_flag("--from-scratch", opts.from_scratch, "start RL from zero parameters");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    vwl::RunConfig cfg = vwl::load_config(config_path);
    if (seed) cfg.seed = *seed;
    for (const std::string& t : toggles) {
      const auto parsed = vwl::pipeline::parse_toggle(t);
      if (!parsed) {
        std::cerr << "error: unknown toggle '" << t << "'; valid toggles: " << valid_toggles() << "\n";
        return kExitConfig;
      }
      opts.toggles.set(*parsed);
    }
    if (!in.empty()) opts.in = in;
    if (!out.empty()) opts.out = out;
    if (!log.empty()) {
      if (command == "report") opts.logs.insert(opts.logs.begin(), log);
      else opts.log = log;
    }

    if (command == "gen-data") vwl::pipeline::cmd_gen_data(cfg);
    else if (command == "pretrain") vwl::pipeline::cmd_pretrain(cfg, opts);
    else if (command == "sft") vwl::pipeline::cmd_sft(cfg, opts);
    else if (command == "rl") vwl::pipeline::cmd_rl(cfg, opts);
    else if (command == "eval") vwl::pipeline::cmd_eval(cfg, opts);
    else if (command == "report") vwl::pipeline::cmd_report(cfg, opts);
    else if (command == "ablate") vwl::pipeline::cmd_ablate(cfg, opts);
  } catch (const vwl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const vwl::NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const vwl::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vwl::PreconditionError& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vwl::data::GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
