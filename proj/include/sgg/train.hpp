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

// Training loop, test-split evaluation and the ablation grids.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgg/config.hpp"
#include "sgg/dataset.hpp"
#include "sgg/metrics.hpp"
#include "sgg/model.hpp"
#include "sgg/stats.hpp"

namespace sgg {

// Everything derived from the training split.
struct PreparedData {
  Split split;
  ClassStats stats;
  FrequencyBias bias;
  // Most frequent non-background head class, 0 when there is none.
  std::uint32_t probe_class = 0;
};

PreparedData prepare_data(const RunConfig& cfg, const Dataset& ds);

// Curriculum factor at `iter` (all ones when the curriculum is off).
std::vector<double> curriculum_factors(const RunConfig& cfg, const HeadSet& head_set,
                                       std::size_t num_classes, std::uint64_t iter);
// lambda * w per class.
std::vector<double> class_coefficients(const RunConfig& cfg, const ClassStats& stats,
                                       std::uint64_t iter);

std::unique_ptr<SggModel> make_model(const RunConfig& cfg, const Dataset& ds,
                                     const PreparedData& prep);

struct TrainLogRow {
  std::uint64_t iter = 0;
  double lambda = 1.0;
  double l_crw = 0.0;
  double l_sc = 0.0;
  double l_total = 0.0;
  double wall_ms = 0.0;
};

void write_train_log(const std::filesystem::path& path, std::span<const TrainLogRow> rows);
std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path);

// Seen before the optimizer update of each iteration.
struct StepRecord {
  std::uint64_t iter = 0;
  std::span<const std::size_t> scene_ids;
  std::span<const std::vector<CandidatePair>> pairs;
  const std::vector<double>* class_coef = nullptr;
  const LossTerms* loss = nullptr;
  const SggModel* model = nullptr;
};

struct TrainOptions {
  // Write config, log, checkpoints and final metrics under cfg.out.
  bool write_files = true;
  // Evaluate every eval_interval; the final evaluation always runs.
  bool periodic_eval = true;
  std::function<void(const StepRecord&)> on_step;
  std::ostream* progress = nullptr;
};

struct EvalOutput {
  std::vector<std::size_t> scene_ids;
  std::vector<ScenePrediction> predictions;
  std::vector<RankedTriplets> rankings;
  MetricsReport report;
  // Scenes with fewer than two objects, excluded from every metric.
  std::vector<std::size_t> skipped;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  EvalOutput final_eval;
  std::uint64_t best_iter = 0;
  double best_mr20 = -1.0;
  std::unique_ptr<SggModel> model;
};

TrainResult train(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opts = {});

EvalOutput evaluate_model(const SggModel& model, const Dataset& ds,
                          std::span<const std::size_t> scene_ids, const HeadSet& head_set,
                          bool graph_constraint);

// metrics.csv, per_class.csv, top5.txt and predictions.tsv under dir.
void write_eval_outputs(const std::filesystem::path& dir, const EvalOutput& eval,
                        const Dataset& ds);

// Probabilities dumped by write_eval_outputs, keyed by scene.
struct DumpedScene {
  std::size_t scene_id = 0;
  std::vector<PairScores> pairs;
  std::vector<double> probs;
};
std::vector<DumpedScene> read_predictions(const std::filesystem::path& path,
                                          std::size_t num_classes);

// Resolves cfg.dataset or generates from cfg.data.
Dataset obtain_dataset(const RunConfig& cfg);

struct AblationCell {
  std::string grid;  // table3, table4 or table5
  std::string name;
  std::size_t index = 0;  // position in the full listing, used for seeding
  std::vector<std::string> overrides;
};

// grid is table3, table4, table5 or all.
std::vector<AblationCell> ablation_cells(const std::string& grid);

struct AblationRun {
  std::string grid;
  std::string cell;
  std::size_t cell_index = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::array<double, 3> mean_recall{};
  std::array<double, 3> recall{};
  std::optional<double> head_mr20;
  std::optional<double> tail_mr20;
};

std::vector<AblationRun> run_ablation(const RunConfig& base, const Dataset& ds,
                                      std::span<const AblationCell> cells, std::size_t seeds,
                                      std::ostream* progress = nullptr);

struct CellAggregate {
  std::string grid;
  std::string cell;
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::array<double, 3> median{};
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  std::optional<double> head_mr20;  // medians over runs that report them
  std::optional<double> tail_mr20;
};

double median(std::vector<double> xs);
std::vector<CellAggregate> aggregate_runs(std::span<const AblationRun> runs);

// One row per run plus median, min and max rows per cell.
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRun> runs);
std::vector<AblationRun> read_ablation_csv(const std::filesystem::path& path);
void print_aggregates(std::ostream& os, std::span<const CellAggregate> cells);

}  // namespace sgg
