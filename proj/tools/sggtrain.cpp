/* Copyright 2026 The sgg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// sggtrain: dataset generation, training, evaluation and ablation grids.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgg/config.hpp"
#include "sgg/dataset.hpp"
#include "sgg/errors.hpp"
#include "sgg/model.hpp"
#include "sgg/train.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& out_help) {
  cmd->add_option("--config", f.config, "TOML-style run configuration");
  cmd->add_option("--override", f.overrides, "section.key=value, repeatable");
  cmd->add_option("--out", f.out, out_help);
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&f](const std::uint64_t& s) {
        f.seed = s;
        f.seed_set = true;
      },
      "Run seed");
  cmd->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
}

sgg::RunConfig resolve(const CommonFlags& f) {
  sgg::RunConfig cfg = f.config.empty() ? sgg::RunConfig{} : sgg::load_config(f.config);
  for (const auto& o : f.overrides) sgg::apply_override(cfg, o);
  return cfg;
}

std::string summarize(const sgg::Dataset& ds) {
  std::vector<std::int64_t> counts(ds.config.num_predicates + 1, 0);
  std::size_t objects = 0;
  for (const auto& s : ds.scenes) {
    objects += s.num_objects();
    for (const auto& r : s.relations) ++counts[r.predicate];
  }
  std::int64_t total = 0;
  std::ostringstream os;
  os << "scenes " << ds.scenes.size() << ", objects " << objects << '\n';
  os << "predicate,count\n";
  for (std::size_t c = 1; c < counts.size(); ++c) {
    os << c << ',' << counts[c] << '\n';
    total += counts[c];
  }
  os << "total," << total << '\n';
  return os.str();
}

int gen_data(const CommonFlags& f, const std::string& jsonl) {
  sgg::RunConfig cfg = resolve(f);
  if (f.seed_set) cfg.data.seed = f.seed;
  if (f.print_config) {
    std::cout << cfg.to_toml();
    return 0;
  }
  cfg.data.validate();
  const std::filesystem::path path = f.out.empty() ? "dataset.sgds" : f.out;
  const sgg::Dataset ds = sgg::generate_dataset(cfg.data);
  sgg::save_dataset(path, ds);
  const std::string summary = summarize(ds);
  std::ofstream(path.string() + ".summary.csv") << summary;
  if (!jsonl.empty()) sgg::export_jsonl(jsonl, ds);
  std::cout << "wrote " << path.string() << '\n' << summary;
  return 0;
}

int train(const CommonFlags& f) {
  sgg::RunConfig cfg = resolve(f);
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (f.print_config) {
    std::cout << cfg.to_toml();
    return 0;
  }
  cfg.validate();
  const sgg::Dataset ds = sgg::obtain_dataset(cfg);
  sgg::TrainOptions opts;
  opts.progress = &std::cout;
  const sgg::TrainResult r = sgg::train(cfg, ds, opts);
  const auto& rep = r.final_eval.report;
  std::printf("final R@20/50/100 %.4f %.4f %.4f  mR@20/50/100 %.4f %.4f %.4f\n", rep.recall[0],
              rep.recall[1], rep.recall[2], rep.mean_recall[0], rep.mean_recall[1],
              rep.mean_recall[2]);
  std::printf("best mR@20 %.4f at iteration %llu; outputs in %s\n", r.best_mr20,
              static_cast<unsigned long long>(r.best_iter), cfg.out.c_str());
  return 0;
}

int eval(const CommonFlags& f, const std::string& checkpoint) {
  sgg::RunConfig cfg = resolve(f);
  if (f.seed_set) cfg.seed = f.seed;
  if (f.print_config) {
    std::cout << cfg.to_toml();
    return 0;
  }
  cfg.validate();
  if (!std::filesystem::exists(checkpoint)) throw sgg::IoError("checkpoint not found: " + checkpoint);
  const sgg::Dataset ds = sgg::obtain_dataset(cfg);
  const sgg::PreparedData prep = sgg::prepare_data(cfg, ds);
  auto model = sgg::make_model(cfg, ds, prep);
  sgg::load_checkpoint(checkpoint, *model);
  const sgg::EvalOutput ev =
      sgg::evaluate_model(*model, ds, prep.split.test, prep.stats.head_set, cfg.graph_constraint);
  const std::filesystem::path dir = f.out.empty() ? std::filesystem::path(cfg.out) / "eval" : std::filesystem::path(f.out);
  sgg::write_eval_outputs(dir, ev, ds);
  std::printf("scenes %zu  R@20/50/100 %.4f %.4f %.4f  mR@20/50/100 %.4f %.4f %.4f\n",
              ev.report.scene_count, ev.report.recall[0], ev.report.recall[1], ev.report.recall[2],
              ev.report.mean_recall[0], ev.report.mean_recall[1], ev.report.mean_recall[2]);
  std::cout << "outputs in " << dir.string() << '\n';
  return 0;
}

int ablate(const CommonFlags& f, const std::string& grid, std::size_t seeds) {
  sgg::RunConfig cfg = resolve(f);
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (f.print_config) {
    std::cout << cfg.to_toml();
    return 0;
  }
  cfg.validate();
  const auto cells = sgg::ablation_cells(grid);
  const sgg::Dataset ds = sgg::obtain_dataset(cfg);
  const auto runs = sgg::run_ablation(cfg, ds, cells, seeds, &std::cout);
  const std::filesystem::path path = std::filesystem::path(cfg.out) / ("ablation_" + grid + ".csv");
  sgg::write_ablation_csv(path, runs);
  const auto agg = sgg::aggregate_runs(runs);
  sgg::print_aggregates(std::cout, agg);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<sgg::AblationRun> runs;
  for (const auto& in : inputs) {
    auto r = sgg::read_ablation_csv(in);
    runs.insert(runs.end(), r.begin(), r.end());
  }
  const auto agg = sgg::aggregate_runs(runs);
  sgg::print_aggregates(std::cout, agg);
  if (!out.empty()) sgg::write_ablation_csv(out, runs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph predicate classification with curriculum re-weighting"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, ablate_flags;
  std::string jsonl, checkpoint, grid = "table3", report_out;
  std::size_t seeds = 5;
  std::vector<std::string> report_inputs;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
  add_common(gen, gen_flags, "Dataset file to write");
  gen->add_option("--jsonl", jsonl, "Also export scenes as JSON lines");

  auto* tr = app.add_subcommand("train", "Train a model and write checkpoints and logs");
  add_common(tr, train_flags, "Output directory");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(ev, eval_flags, "Directory for metric files");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  auto* ab = app.add_subcommand("ablate", "Run an ablation grid over several seeds");
  add_common(ab, ablate_flags, "Output directory");
  ab->add_option("--grid", grid, "table3, table4, table5 or all");
  ab->add_option("--seeds", seeds, "Replicates per cell");

  auto* rp = app.add_subcommand("report", "Aggregate ablation CSVs");
  rp->add_option("--input", report_inputs, "Ablation CSV files")->required();
  rp->add_option("--out", report_out, "Merged CSV to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(sgg::ExitCode::kConfig);
  }

  try {
    if (*gen) return gen_data(gen_flags, jsonl);
    if (*tr) return train(train_flags);
    if (*ev) return eval(eval_flags, checkpoint);
    if (*ab) return ablate(ablate_flags, grid, seeds);
    if (*rp) return report(report_inputs, report_out);
  } catch (const sgg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(sgg::ExitCode::kFailure);
  }
  return 0;
}
