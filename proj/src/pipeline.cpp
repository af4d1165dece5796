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

#include "vwl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "vwl/grammar.hpp"
#include "vwl/metrics.hpp"
#include "vwl/random.hpp"
#include "vwl/rewards.hpp"

namespace vwl::pipeline {

namespace fs = std::filesystem;

std::optional<Toggle> parse_toggle(std::string_view name) {
  for (int i = 0; i < kNumToggles; ++i) {
    if (kToggleNames[static_cast<std::size_t>(i)] == name) return static_cast<Toggle>(i);
  }
  return std::nullopt;
}

bool Toggles::any() const { return std::any_of(on.begin(), on.end(), [](bool b) { return b; }); }

std::string Toggles::describe() const {
  std::string s;
  for (int i = 0; i < kNumToggles; ++i) {
    if (on[static_cast<std::size_t>(i)]) s += (s.empty() ? "" : "+") + std::string(kToggleNames[static_cast<std::size_t>(i)]);
  }
  return s.empty() ? "baseline" : s;
}

RunConfig apply_toggles(RunConfig cfg, const Toggles& t) {
  if (t.has(Toggle::kDropPerception)) cfg.policy.pipeline.perception = false;
  if (t.has(Toggle::kDropGeneration)) cfg.policy.pipeline.generation = false;
  if (t.has(Toggle::kDropReasoning)) cfg.policy.pipeline.reasoning = false;
  if (t.has(Toggle::kZeroPred)) cfg.weights.pred = 0.0;
  if (t.has(Toggle::kZeroVis)) cfg.weights.vis = 0.0;
  if (t.has(Toggle::kZeroAct)) cfg.weights.act = 0.0;
  if (t.has(Toggle::kZeroTraj)) cfg.weights.traj = 0.0;
  return cfg;
}

Datasets split(const std::vector<data::DatasetRecord>& records) {
  Datasets d;
  for (const data::DatasetRecord& r : records) (r.split == data::Split::kTrain ? d.train : d.val).push_back(r);
  return d;
}

std::string train_path(const RunConfig& cfg) { return (fs::path(cfg.data_dir) / "train.jsonl").string(); }
std::string val_path(const RunConfig& cfg) { return (fs::path(cfg.data_dir) / "val.jsonl").string(); }

Datasets load_datasets(const RunConfig& cfg) {
  Datasets d;
  d.train = data::load_dataset(train_path(cfg));
  d.val = data::load_dataset(val_path(cfg));
  return d;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

constexpr std::uint64_t kPretrainTag = 0x70726574ULL;
constexpr std::uint64_t kSftTag = 0x736674ULL;
constexpr std::uint64_t kRlTag = 0x726cULL;

std::vector<policy::HeadInputs> teacher_set(const std::vector<data::DatasetRecord>& records, const RunConfig& cfg) {
  std::vector<policy::HeadInputs> out;
  out.reserve(records.size());
  for (const data::DatasetRecord& r : records) {
    out.push_back(policy::teacher_inputs(r.scene, r.goal, data::make_gt_sample(r, cfg.policy), cfg.policy));
  }
  return out;
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  }
  return order;
}

// Greedy generation head output for each cell of an imagined frame.
worldsim::OccupancyGrid generate_greedy(const policy::PolicyParams& params, const worldsim::OccupancyGrid& imagined) {
  const int v = static_cast<int>(params.gen_bias.size());
  std::vector<std::uint8_t> map(static_cast<std::size_t>(v));
  for (int j = 0; j < v; ++j) {
    Eigen::Index best = 0;
    (params.gen_weight.col(j) + params.gen_bias).maxCoeff(&best);
    map[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(best);
  }
  worldsim::OccupancyGrid g = imagined;
  for (std::uint8_t& c : g.cells) c = map[c];
  return g;
}

double token_accuracy(const policy::PolicyParams& params, const std::vector<data::DatasetRecord>& records,
                      const RunConfig& cfg) {
  if (records.empty()) return 0.0;
  double hits = 0.0, total = 0.0;
  for (const data::DatasetRecord& r : records) {
    const worldsim::OccupancyGrid imagined =
        worldsim::imagine(r.scene, r.gt_short.waypoint, cfg.policy.dt, cfg.policy.grid, cfg.policy.refine.ego);
    const worldsim::OccupancyGrid gen = generate_greedy(params, imagined);
    for (std::size_t c = 0; c < gen.cells.size(); ++c) hits += gen.cells[c] == r.gt_future_grid.cells[c];
    total += static_cast<double>(gen.cells.size());
  }
  return hits / total;
}

double action_accuracy(const policy::PolicyParams& params, const std::vector<policy::HeadInputs>& inputs) {
  if (inputs.empty()) return 0.0;
  double hits = 0.0;
  for (const policy::HeadInputs& in : inputs) {
    Eigen::Index best = 0;
    (params.act_weight * in.act_input).maxCoeff(&best);
    hits += best == in.action_index;
  }
  return hits / static_cast<double>(inputs.size());
}

StageResult run_supervised(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init,
                           policy::SupervisedMode mode, const StageConfig& stage, std::uint64_t tag) {
  StageResult out{init, {}};
  if (stage.epochs == 0 || d.train.empty()) return out;
  const std::vector<policy::HeadInputs> train = teacher_set(d.train, cfg);
  const std::vector<policy::HeadInputs> val =
      mode == policy::SupervisedMode::kFineTune ? teacher_set(d.val, cfg) : std::vector<policy::HeadInputs>{};
  const auto batch_size = static_cast<std::size_t>(stage.batch_size);
  for (int epoch = 0; epoch < stage.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled(train.size(), derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(epoch)));
    EpochRow row;
    row.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<policy::HeadInputs> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) batch.push_back(train[order[k]]);
      auto [loss, grad] = policy::supervised_loss_and_grad(out.params, batch, mode);
      if (!grad.all_finite()) throw NumericalError("non-finite supervised gradient in epoch " + std::to_string(epoch));
      if (mode == policy::SupervisedMode::kPretrain) {
        out.params.gen_weight -= stage.learning_rate * grad.gen_weight;
        out.params.gen_bias -= stage.learning_rate * grad.gen_bias;
      } else {
        out.params.axpy(-stage.learning_rate, grad);
      }
      row.loss += loss;
      row.grad_norm = std::sqrt(grad.squared_norm());
      ++batches;
    }
    row.loss /= batches;
    row.val_metric = mode == policy::SupervisedMode::kPretrain ? token_accuracy(out.params, d.val, cfg)
                                                               : action_accuracy(out.params, val);
    spdlog::debug("{} epoch {}: loss {:.6f} val {:.4f}", tag == kPretrainTag ? "pretrain" : "sft", epoch, row.loss,
                  row.val_metric);
    out.log.push_back(row);
  }
  return out;
}

rewards::RewardTarget target_of(const data::DatasetRecord& r, const RunConfig& cfg) {
  rewards::RewardTarget t;
  t.gt_short = r.gt_short;
  t.gt_action = r.gt_action;
  t.gt_trajectory = r.gt_trajectory;
  t.v0 = r.scene.ego.velocity;
  t.a0 = r.scene.ego.acceleration;
  t.required_tokens = cfg.policy.grid.num_cells();
  t.codebook_size = cfg.policy.grid.num_classes;
  return t;
}

}  // namespace

StageResult run_pretrain(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init) {
  return run_supervised(cfg, d, init, policy::SupervisedMode::kPretrain, cfg.pretrain, kPretrainTag);
}

StageResult run_sft(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init) {
  return run_supervised(cfg, d, init, policy::SupervisedMode::kFineTune, cfg.sft, kSftTag);
}

RlResult run_rl(const RunConfig& cfg, const Datasets& d, const policy::PolicyParams& init) {
  std::vector<grpo::Prompt> prompts;
  for (const data::DatasetRecord& r : d.train) prompts.push_back({&r.scene, r.goal, target_of(r, cfg)});
  std::vector<grpo::ProbeCase> probes;
  for (std::size_t i = 0; i < d.val.size() && static_cast<int>(i) < cfg.probe_size; ++i) {
    probes.push_back({&d.val[i].scene, d.val[i].goal, d.val[i].gt_trajectory});
  }
  grpo::GrpoConfig g = cfg.rl;
  g.seed = derive_seed(cfg.seed, kRlTag);
  grpo::TrainResult t = grpo::train(g, prompts, probes, init, init, cfg.policy, cfg.weights, cfg.shaping);
  return {std::move(t.params), std::move(t.log)};
}

policy::PolicyParams run_all(const RunConfig& cfg, const Toggles& toggles, const Datasets& d) {
  policy::PolicyParams p = policy::PolicyParams::zeros(cfg.policy.grid.num_classes, kHorizon);
  if (!toggles.has(Toggle::kSkipPretrain)) p = run_pretrain(cfg, d, p).params;
  if (!toggles.has(Toggle::kSkipSft)) p = run_sft(cfg, d, p).params;
  if (!toggles.has(Toggle::kSkipRl)) p = run_rl(cfg, d, p).params;
  return p;
}

void write_epoch_log(std::ostream& os, const std::vector<EpochRow>& rows, std::string_view metric_name) {
  os << "epoch,loss,grad_norm," << metric_name << '\n';
  char buf[160];
  for (const EpochRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.epoch, r.loss, r.grad_norm, r.val_metric);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Evaluation

GenerationScore score_generation(const policy::PolicyParams& params, const std::vector<data::DatasetRecord>& records,
                                 const RunConfig& cfg) {
  GenerationScore s;
  if (records.empty()) return s;
  std::vector<worldsim::OccupancyGrid> gen, gt;
  double hits = 0.0, total = 0.0;
  for (const data::DatasetRecord& r : records) {
    const worldsim::OccupancyGrid imagined =
        worldsim::imagine(r.scene, r.gt_short.waypoint, cfg.policy.dt, cfg.policy.grid, cfg.policy.refine.ego);
    gen.push_back(generate_greedy(params, imagined));
    gt.push_back(r.gt_future_grid);
    for (std::size_t c = 0; c < imagined.cells.size(); ++c) hits += gen.back().cells[c] == gt.back().cells[c];
    total += static_cast<double>(imagined.cells.size());
  }
  s.token_accuracy = hits / total;
  if (records.size() >= 2) {
    const metrics::GridProjection proj(cfg.projection_seed, cfg.feature_dim, cfg.policy.grid);
    s.frechet = metrics::frechet_distance(proj.features(gen), proj.features(gt));
  }
  return s;
}

double EvalReport::value(std::string_view metric) const {
  for (const auto& [k, v] : rows) {
    if (k == metric) return v;
  }
  throw PreconditionError("report has no metric " + std::string(metric));
}

namespace {

EvalReport assemble(const std::vector<data::DatasetRecord>& records, const std::vector<grammar::StructuredSample>& preds,
                    const GenerationScore& gen, const RunConfig& cfg) {
  EvalReport rep;
  auto add = [&](std::string k, double v) { rep.rows.emplace_back(std::move(k), v); };
  const std::array<const char*, 3> horizons = {"1s", "2s", "3s"};

  std::vector<double> per_step(kHorizon, 0.0);
  std::vector<metrics::CollisionTrace> traces;
  std::vector<ActionLabel> pa, ga;
  rewards::RewardBreakdown mean;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const data::DatasetRecord& r = records[i];
    const grammar::StructuredSample& p = preds[i];
    const metrics::L2Report l2 = metrics::l2_report(p.answer, r.gt_trajectory);
    for (int h = 0; h < kHorizon; ++h) per_step[static_cast<std::size_t>(h)] += l2.per_step[static_cast<std::size_t>(h)];
    traces.push_back(metrics::collision_trace(p.answer, r.scene, cfg.policy.refine.ego));
    pa.push_back(p.action);
    ga.push_back(r.gt_action);
    const rewards::RewardBreakdown b =
        rewards::score(grammar::serialize(p), target_of(r, cfg), cfg.weights, cfg.shaping);
    mean.fmt += b.fmt;
    mean.pred += b.pred;
    mean.vis += b.vis;
    mean.act += b.act;
    mean.traj += b.traj;
    mean.total += b.total;
  }
  const double n = std::max<double>(1.0, static_cast<double>(records.size()));
  for (double& v : per_step) v /= n;
  const metrics::L2Report l2 = metrics::protocol_views(per_step);
  for (std::size_t k = 0; k < 3; ++k) add(std::string("l2_stp3_") + horizons[k], l2.stp3_at[k]);
  add("l2_stp3_avg", l2.stp3_avg);
  for (std::size_t k = 0; k < 3; ++k) add(std::string("l2_uniad_") + horizons[k], l2.uniad_at[k]);
  add("l2_uniad_avg", l2.uniad_avg);

  const metrics::CollisionReport col = metrics::collision_report(traces);
  for (std::size_t k = 0; k < 3; ++k) add(std::string("collision_stp3_") + horizons[k], col.stp3_at[k]);
  add("collision_stp3_avg", col.stp3_avg);
  for (std::size_t k = 0; k < 3; ++k) add(std::string("collision_uniad_") + horizons[k], col.uniad_at[k]);
  add("collision_uniad_avg", col.uniad_avg);
  add("collision_count", col.colliding_samples);

  const std::array<double, 7> f1 = metrics::action_f1(pa, ga);
  for (std::size_t c = 0; c < f1.size(); ++c) add(std::string("f1_") + metrics::kActionClasses[c], f1[c]);

  add("token_accuracy", gen.token_accuracy);
  add("frechet", gen.frechet);
  add("reward_fmt", mean.fmt / n);
  add("reward_pred", mean.pred / n);
  add("reward_vis", mean.vis / n);
  add("reward_act", mean.act / n);
  add("reward_traj", mean.traj / n);
  add("reward_total", mean.total / n);
  add("samples", static_cast<double>(records.size()));
  return rep;
}

}  // namespace

EvalReport evaluate(const policy::PolicyParams& params, const std::vector<data::DatasetRecord>& records,
                    const RunConfig& cfg) {
  std::vector<grammar::StructuredSample> preds;
  for (const data::DatasetRecord& r : records) {
    preds.push_back(policy::sample_rollout(params, r.scene, r.goal, cfg.policy, 0, policy::Decoding::kGreedy).sample);
  }
  return assemble(records, preds, score_generation(params, records, cfg), cfg);
}

EvalReport evaluate_ground_truth(const std::vector<data::DatasetRecord>& records, const RunConfig& cfg) {
  std::vector<grammar::StructuredSample> preds;
  for (const data::DatasetRecord& r : records) preds.push_back(data::make_gt_sample(r, cfg.policy));
  GenerationScore gen;
  if (!records.empty()) {
    gen.token_accuracy = 1.0;
    if (records.size() >= 2) {
      std::vector<worldsim::OccupancyGrid> gt;
      for (const data::DatasetRecord& r : records) gt.push_back(r.gt_future_grid);
      const metrics::GridProjection proj(cfg.projection_seed, cfg.feature_dim, cfg.policy.grid);
      const Eigen::MatrixXd f = proj.features(gt);
      gen.frechet = metrics::frechet_distance(f, f);
    }
  }
  return assemble(records, preds, gen, cfg);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_report(std::ostream& os, const EvalReport& r) {
  os << "metric,value\n";
  for (const auto& [k, v] : r.rows) os << k << ',' << num(v) << '\n';
}

void write_comparison(std::ostream& os, const EvalReport& variant, const EvalReport& baseline) {
  os << "metric,value,baseline,delta\n";
  for (const auto& [k, v] : variant.rows) {
    const double b = baseline.value(k);
    os << k << ',' << num(v) << ',' << num(b) << ',' << num(v - b) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Plot data

LogTable read_log(std::istream& is, const std::string& run) {
  LogTable t;
  t.run = run;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) -> void {
    throw IoError(run + ": line " + std::to_string(lineno) + ": " + what);
  };
  auto split_csv = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(is, line)) {
    lineno = 1;
    fail("missing header");
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.columns = split_csv(line);
  if (t.columns.size() < 2) fail("header needs a step column and at least one metric");
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != t.columns.size()) {
      fail("expected " + std::to_string(t.columns.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (const std::string& f : fields) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty() || *end != '\0') fail("non-numeric field '" + f + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::pair<std::string, std::string>> report_series(const std::vector<LogTable>& logs) {
  std::vector<std::pair<std::string, std::string>> files;
  if (logs.empty()) return files;
  const std::vector<std::string>& cols = logs.front().columns;
  for (const LogTable& t : logs) {
    if (t.columns != cols) throw IoError(t.run + ": line 1: columns differ from " + logs.front().run);
  }
  for (std::size_t c = 1; c < cols.size(); ++c) {
    // step -> values across runs
    std::map<double, std::vector<double>> by_step;
    for (const LogTable& t : logs) {
      for (const auto& row : t.rows) by_step[row[0]].push_back(row[c]);
    }
    std::string out = cols[0] + ",run,value,mean,std\n";
    for (const LogTable& t : logs) {
      for (const auto& row : t.rows) {
        const std::vector<double>& vs = by_step[row[0]];
        const double mean = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
        double var = 0.0;
        for (double v : vs) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / static_cast<double>(vs.size()));
        out += num(row[0]) + "," + t.run + "," + num(row[c]) + "," + num(mean) + "," + num(sd) + "\n";
      }
    }
    files.emplace_back(cols[c], std::move(out));
  }
  return files;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
  }
}

void write_file(const std::string& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << content;
  if (!os) throw IoError("failed writing " + path);
}

std::string in_run_dir(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.run_dir) / name).string(); }

policy::PolicyParams initial_params(const RunConfig& cfg, const std::optional<std::string>& in) {
  if (!in) return policy::PolicyParams::zeros(cfg.policy.grid.num_classes, kHorizon);
  policy::PolicyParams p = policy::load_checkpoint(*in);
  if (!p.same_shape(policy::PolicyParams::zeros(cfg.policy.grid.num_classes, kHorizon))) {
    throw ShapeError("checkpoint " + *in + " does not match the configured grid classes or horizon");
  }
  return p;
}

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
  const std::vector<data::DatasetRecord> records = data::generate_scenarios(cfg.scenario, cfg.policy);
  const Datasets d = split(records);
  ensure_parent(train_path(cfg));
  data::save_dataset(d.train, train_path(cfg));
  data::save_dataset(d.val, val_path(cfg));

  std::map<std::string, int> counts;
  double agents = 0.0;
  for (const data::DatasetRecord& r : records) {
    ++counts["split_" + std::string(data::to_string(r.split))];
    ++counts["goal_" + std::string(to_string(r.goal))];
    ++counts["longitudinal_" + std::string(to_string(r.gt_action.longitudinal))];
    agents += static_cast<double>(r.scene.agents.size());
  }
  std::string stats = "statistic,value\nrecords," + std::to_string(records.size()) + "\n";
  for (const auto& [k, v] : counts) stats += k + "," + std::to_string(v) + "\n";
  stats += "mean_agents," + num(records.empty() ? 0.0 : agents / static_cast<double>(records.size())) + "\n";
  write_file((fs::path(cfg.data_dir) / "stats.csv").string(), stats);
  spdlog::info("wrote {} train and {} val records to {}", d.train.size(), d.val.size(), cfg.data_dir);
}

void cmd_pretrain(const RunConfig& cfg, const CommandOptions& o) {
  const RunConfig c = apply_toggles(cfg, o.toggles);
  const Datasets d = load_datasets(c);
  const StageResult r = run_pretrain(c, d, initial_params(c, o.in));
  const std::string out = o.out.value_or(in_run_dir(c, "pretrain.ckpt"));
  ensure_parent(out);
  policy::save_checkpoint(out, r.params);
  write_file(o.log.value_or(in_run_dir(c, "pretrain_log.csv")),
             render([&](std::ostream& os) { write_epoch_log(os, r.log, "val_token_accuracy"); }));
}

void cmd_sft(const RunConfig& cfg, const CommandOptions& o) {
  const RunConfig c = apply_toggles(cfg, o.toggles);
  const Datasets d = load_datasets(c);
  const StageResult r = run_sft(c, d, initial_params(c, o.in));
  const std::string out = o.out.value_or(in_run_dir(c, "sft.ckpt"));
  ensure_parent(out);
  policy::save_checkpoint(out, r.params);
  write_file(o.log.value_or(in_run_dir(c, "sft_log.csv")),
             render([&](std::ostream& os) { write_epoch_log(os, r.log, "val_action_accuracy"); }));
}

void cmd_rl(const RunConfig& cfg, const CommandOptions& o) {
  if (!o.in && !o.from_scratch) throw ConfigError("--in", "rl needs an SFT checkpoint (or --from-scratch)");
  const RunConfig c = apply_toggles(cfg, o.toggles);
  const Datasets d = load_datasets(c);
  const RlResult r = run_rl(c, d, initial_params(c, o.from_scratch ? std::nullopt : o.in));
  const std::string out = o.out.value_or(in_run_dir(c, "rl.ckpt"));
  ensure_parent(out);
  policy::save_checkpoint(out, r.params);
  write_file(o.log.value_or(in_run_dir(c, "rl_log.csv")), render([&](std::ostream& os) { grpo::write_log(os, r.log); }));
}

void cmd_eval(const RunConfig& cfg, const CommandOptions& o) {
  const RunConfig c = apply_toggles(cfg, o.toggles);
  const std::vector<data::DatasetRecord> val = data::load_dataset(val_path(c));
  const EvalReport rep = evaluate(initial_params(c, o.in), val, c);
  write_file(o.out.value_or(in_run_dir(c, "eval_report.csv")), render([&](std::ostream& os) { write_report(os, rep); }));
}

void cmd_report(const RunConfig& cfg, const CommandOptions& o) {
  if (o.logs.empty()) throw ConfigError("--log", "report needs at least one training log");
  std::vector<LogTable> tables;
  for (const std::string& path : o.logs) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read log " + path);
    tables.push_back(read_log(is, fs::path(path).stem().string()));
  }
  const fs::path dir = o.out.value_or(in_run_dir(cfg, "report"));
  for (const auto& [metric, content] : report_series(tables)) write_file((dir / (metric + ".csv")).string(), content);
}

void cmd_ablate(const RunConfig& cfg, const CommandOptions& o) {
  const Datasets d = load_datasets(cfg);
  const policy::PolicyParams base = run_all(cfg, {}, d);
  const EvalReport baseline = evaluate(base, d.val, cfg);
  const RunConfig vc = apply_toggles(cfg, o.toggles);
  const EvalReport variant = o.toggles.any() ? evaluate(run_all(vc, o.toggles, d), d.val, vc) : baseline;
  write_file(o.out.value_or(in_run_dir(cfg, "ablation_" + o.toggles.describe() + ".csv")),
             render([&](std::ostream& os) { write_comparison(os, variant, baseline); }));
  spdlog::info("ablation {}: l2_stp3_avg {:.4f} vs baseline {:.4f}", o.toggles.describe(),
               variant.value("l2_stp3_avg"), baseline.value("l2_stp3_avg"));
}

}  // namespace vwl::pipeline
