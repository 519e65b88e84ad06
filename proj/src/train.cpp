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

#include "sgg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "sgg/crm.hpp"
#include "sgg/errors.hpp"
#include "sgg/optim.hpp"

namespace sgg {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(what + ": bad number '" + s + "'");
}

std::optional<double> parse_opt(const std::string& s, const std::string& what) {
  if (s == "NA") return std::nullopt;
  return parse_double(s, what);
}

constexpr std::size_t kEvalChunk = 32;
constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

}  // namespace

PreparedData prepare_data(const RunConfig& cfg, const Dataset& ds) {
  PreparedData prep;
  prep.split = split_dataset(ds);
  if (prep.split.train.empty()) throw DataError("dataset has no training scenes");
  prep.stats = count_predicates(ds, prep.split.train, cfg.sampling);
  prep.stats.head_set = select_head_set(prep.stats.counts, cfg.crm.rho);
  if (cfg.crm.class_balanced) {
    prep.stats.weights = class_balanced_weights(prep.stats.counts, cfg.crm.beta);
  } else {
    prep.stats.weights.assign(prep.stats.counts.size(), 1.0);
  }
  prep.bias = build_frequency_bias(ds, prep.split.train, cfg.bias_smoothing);
  std::int64_t best = -1;
  for (std::uint32_t c : prep.stats.head_set) {
    if (c != 0 && prep.stats.counts[c] > best) {
      best = prep.stats.counts[c];
      prep.probe_class = c;
    }
  }
  return prep;
}

std::vector<double> curriculum_factors(const RunConfig& cfg, const HeadSet& head_set,
                                       std::size_t num_classes, std::uint64_t iter) {
  if (!cfg.crm.enabled) return std::vector<double>(num_classes, 1.0);
  return lambda_factor(cfg.schedule(), iter, head_set, num_classes);
}

std::vector<double> class_coefficients(const RunConfig& cfg, const ClassStats& stats,
                                       std::uint64_t iter) {
  std::vector<double> coef = curriculum_factors(cfg, stats.head_set, stats.num_classes(), iter);
  for (std::size_t c = 0; c < coef.size(); ++c) coef[c] *= stats.weights[c];
  return coef;
}

std::unique_ptr<SggModel> make_model(const RunConfig& cfg, const Dataset& ds,
                                     const PreparedData& prep) {
  return std::make_unique<SggModel>(cfg.model_config(ds.config), cfg.seed, prep.bias);
}

void write_train_log(const std::filesystem::path& path, std::span<const TrainLogRow> rows) {
  auto out = open_out(path);
  out << "iter,lambda,l_crw,l_sc,l_total,wall_ms\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << fmt(r.lambda) << ',' << fmt(r.l_crw) << ',' << fmt(r.l_sc) << ','
        << fmt(r.l_total) << ',' << fmt(r.wall_ms) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<TrainLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw FormatError(path.string() + ": expected 6 columns");
    TrainLogRow r;
    r.iter = static_cast<std::uint64_t>(parse_double(c[0], "iter"));
    r.lambda = parse_double(c[1], "lambda");
    r.l_crw = parse_double(c[2], "l_crw");
    r.l_sc = parse_double(c[3], "l_sc");
    r.l_total = parse_double(c[4], "l_total");
    r.wall_ms = parse_double(c[5], "wall_ms");
    rows.push_back(r);
  }
  return rows;
}

EvalOutput evaluate_model(const SggModel& model, const Dataset& ds,
                          std::span<const std::size_t> scene_ids, const HeadSet& head_set,
                          bool graph_constraint) {
  NoGradGuard no_grad;
  EvalOutput ev;
  const std::size_t c = model.config().num_classes();
  std::vector<std::size_t> usable;
  for (std::size_t id : scene_ids) {
    if (id >= ds.scenes.size()) throw ContractError("evaluate: scene index out of range");
    (ds.scenes[id].num_objects() >= 2 ? usable : ev.skipped).push_back(id);
  }
  for (std::size_t start = 0; start < usable.size(); start += kEvalChunk) {
    const std::size_t end = std::min(usable.size(), start + kEvalChunk);
    std::vector<const SceneInstance*> scenes;
    std::vector<std::vector<CandidatePair>> pairs;
    for (std::size_t i = start; i < end; ++i) {
      scenes.push_back(&ds.scenes[usable[i]]);
      pairs.push_back(all_pairs(ds.scenes[usable[i]]));
    }
    const BatchOutput out = model.forward(scenes, pairs, nullptr);
    const Value probs = softmax(out.logits);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      ScenePrediction pred;
      pred.num_classes = c;
      pred.pairs = std::move(pairs[s]);
      const auto lo = static_cast<std::ptrdiff_t>(out.offsets[s] * c);
      const auto hi = static_cast<std::ptrdiff_t>(out.offsets[s + 1] * c);
      pred.logits.assign(out.logits.data().begin() + lo, out.logits.data().begin() + hi);
      pred.probs.assign(probs.data().begin() + lo, probs.data().begin() + hi);
      ev.scene_ids.push_back(usable[start + s]);
      ev.predictions.push_back(std::move(pred));
    }
  }
  std::vector<std::vector<Relation>> gt;
  for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
    const auto& pred = ev.predictions[i];
    std::vector<PairScores> ps;
    ps.reserve(pred.pairs.size());
    for (const auto& p : pred.pairs) ps.push_back({p.subject, p.object});
    ev.rankings.push_back(rank_triplets(ps, pred.probs, c, graph_constraint));
    gt.push_back(ds.scenes[ev.scene_ids[i]].relations);
  }
  ev.report = evaluate_rankings(ev.rankings, gt, c, head_set);
  return ev;
}

void write_eval_outputs(const std::filesystem::path& dir, const EvalOutput& ev,
                        const Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_metrics_csv(dir / "metrics.csv", ev.report);
  write_per_class_csv(dir / "per_class.csv", ev.report);
  if (!ev.skipped.empty()) {
    auto out = open_out(dir / "warnings.txt");
    for (std::size_t id : ev.skipped) out << "scene " << id << ": fewer than 2 objects, skipped\n";
  }
  {
    auto out = open_out(dir / "top5.txt");
    for (std::size_t i = 0; i < ev.rankings.size(); ++i) {
      const SceneInstance& scene = ds.scenes[ev.scene_ids[i]];
      out << "scene " << ev.scene_ids[i] << " (" << scene.num_objects() << " objects, "
          << scene.relations.size() << " relations)\n";
      for (const auto& r : scene.relations) {
        out << "  gt   " << r.subject << ":obj" << scene.labels[r.subject] << " -pred" << r.predicate
            << "-> " << r.object << ":obj" << scene.labels[r.object] << '\n';
      }
      const auto& rank = ev.rankings[i];
      for (std::size_t k = 0; k < std::min<std::size_t>(5, rank.size()); ++k) {
        const auto& t = rank[k];
        const bool hit = std::find(scene.relations.begin(), scene.relations.end(),
                                   Relation{t.subject, t.object, t.predicate}) !=
                         scene.relations.end();
        char score[32];
        std::snprintf(score, sizeof score, "%.4f", t.score);
        out << "  top" << k + 1 << ' ' << t.subject << ":obj" << scene.labels[t.subject] << " -pred"
            << t.predicate << "-> " << t.object << ":obj" << scene.labels[t.object] << "  "
            << score << (hit ? "  match" : "") << '\n';
      }
    }
    if (!out) throw IoError("failed writing top5.txt");
  }
  auto out = open_out(dir / "predictions.tsv");
  for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
    const auto& pred = ev.predictions[i];
    for (std::size_t p = 0; p < pred.pairs.size(); ++p) {
      out << ev.scene_ids[i] << '\t' << pred.pairs[p].subject << '\t' << pred.pairs[p].object;
      for (std::size_t k = 0; k < pred.num_classes; ++k) {
        out << '\t' << fmt(pred.probs[p * pred.num_classes + k]);
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing predictions.tsv");
}

std::vector<DumpedScene> read_predictions(const std::filesystem::path& path,
                                          std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<DumpedScene> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t scene = 0;
    PairScores ps;
    if (!(ls >> scene >> ps.subject >> ps.object)) throw FormatError("predictions: bad row");
    if (out.empty() || out.back().scene_id != scene) out.push_back({scene, {}, {}});
    out.back().pairs.push_back(ps);
    for (std::size_t k = 0; k < num_classes; ++k) {
      std::string tok;
      if (!(ls >> tok)) throw FormatError("predictions: short row");
      out.back().probs.push_back(parse_double(tok, "predictions"));
    }
  }
  return out;
}

TrainResult train(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opts) {
  cfg.validate();
  const PreparedData prep = prepare_data(cfg, ds);
  TrainResult result;
  result.model = make_model(cfg, ds, prep);
  SggModel& model = *result.model;
  const std::filesystem::path out_dir = cfg.out;
  if (opts.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    auto cfg_out = open_out(out_dir / "config.toml");
    cfg_out << cfg.to_toml();
  }

  std::vector<std::size_t> order;
  for (std::size_t id : prep.split.train) {
    if (ds.scenes[id].num_objects() >= 2) order.push_back(id);
  }
  if (order.empty()) throw DataError("no training scene has two or more objects");
  std::mt19937_64 rng(cfg.seed ^ kShuffleSalt);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  std::vector<Value> params = model.parameter_values();
  OptState opt;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t num_classes = prep.stats.num_classes();

  auto run_eval = [&](std::uint64_t iter) {
    EvalOutput ev = evaluate_model(model, ds, prep.split.test, prep.stats.head_set,
                                   cfg.graph_constraint);
    if (opts.progress) {
      *opts.progress << "iter " << iter << " test mR@20 " << fmt(ev.report.mr20()) << " R@20 "
                     << fmt(ev.report.recall[0]) << std::endl;
    }
    if (ev.report.mr20() > result.best_mr20) {
      result.best_mr20 = ev.report.mr20();
      result.best_iter = iter;
      if (opts.write_files) save_checkpoint(out_dir / "best.ckpt", model);
    }
    return ev;
  };

  for (std::uint64_t iter = 0; iter < cfg.total_iters; ++iter) {
    std::vector<std::size_t> batch;
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    std::vector<const SceneInstance*> scenes;
    std::vector<std::vector<CandidatePair>> pairs;
    for (std::size_t id : batch) {
      scenes.push_back(&ds.scenes[id]);
      pairs.push_back(sample_train_pairs(ds.scenes[id], cfg.sampling, rng));
    }
    const std::vector<double> coef = class_coefficients(cfg, prep.stats, iter);
    try {
      const BatchOutput out = model.forward(scenes, pairs, &coef);
      const LossTerms& loss = *out.loss;
      if (opts.on_step) {
        opts.on_step({iter, batch, pairs, &coef, &loss, &model});
      }
      if (iter % cfg.log_interval == 0 || iter + 1 == cfg.total_iters) {
        TrainLogRow row;
        row.iter = iter;
        row.lambda = curriculum_factors(cfg, prep.stats.head_set, num_classes, iter)[prep.probe_class];
        row.l_crw = loss.crw.item();
        row.l_sc = loss.sc.item();
        row.l_total = loss.total.item();
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(row);
      }
      backward(loss.total);
      sgd_step(params, opt, cfg.sgd);
    } catch (const NumericError& e) {
      std::ostringstream ids;
      for (std::size_t i = 0; i < batch.size(); ++i) ids << (i ? " " : "") << batch[i];
      const std::string diag = "iteration " + std::to_string(iter) + ", batch scenes [" + ids.str() + "]";
      if (opts.write_files) {
        std::ofstream dump(out_dir / "nan_batch.txt");
        dump << diag << '\n' << e.what() << '\n';
      }
      throw NumericError(std::string(e.what()) + " at " + diag);
    }
    const std::uint64_t done = iter + 1;
    if (opts.periodic_eval && cfg.eval_interval > 0 && done % cfg.eval_interval == 0 &&
        done != cfg.total_iters) {
      run_eval(done);
    }
  }
  result.final_eval = run_eval(cfg.total_iters);
  if (opts.write_files) {
    save_checkpoint(out_dir / "final.ckpt", model);
    write_train_log(out_dir / "train_log.csv", result.log);
    write_eval_outputs(out_dir, result.final_eval, ds);
  }
  return result;
}

Dataset obtain_dataset(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) return load_dataset(cfg.dataset);
  return generate_dataset(cfg.data);
}

std::vector<AblationCell> ablation_cells(const std::string& grid) {
  const std::vector<AblationCell> all = {
      {"table3", "baseline", 0, {"crm.enabled=false", "scm.enabled=false"}},
      {"table3", "crm", 1, {"crm.enabled=true", "scm.enabled=false"}},
      {"table3", "scm", 2, {"crm.enabled=false", "scm.enabled=true"}},
      {"table3", "crm+scm", 3, {"crm.enabled=true", "scm.enabled=true"}},
      {"table4", "exponential", 4, {"crm.enabled=true", "scm.enabled=true", "crm.schedule=exponential"}},
      {"table4", "cosine", 5, {"crm.enabled=true", "scm.enabled=true", "crm.schedule=cosine"}},
      {"table4", "linear", 6, {"crm.enabled=true", "scm.enabled=true", "crm.schedule=linear"}},
      {"table5", "mean", 7, {"crm.enabled=true", "scm.enabled=true", "scm.variant=mean"}},
      {"table5", "global", 8, {"crm.enabled=true", "scm.enabled=true", "scm.variant=global"}},
  };
  if (grid == "all") return all;
  std::vector<AblationCell> out;
  for (const auto& c : all) {
    if (c.grid == grid) out.push_back(c);
  }
  if (out.empty()) throw ConfigError("unknown ablation grid '" + grid + "' (table3, table4, table5, all)");
  return out;
}

std::vector<AblationRun> run_ablation(const RunConfig& base, const Dataset& ds,
                                      std::span<const AblationCell> cells, std::size_t seeds,
                                      std::ostream* progress) {
  if (seeds < 1) throw ConfigError("ablation needs at least one seed");
  std::vector<AblationRun> runs;
  for (const auto& cell : cells) {
    for (std::size_t rep = 0; rep < seeds; ++rep) {
      AblationRun run;
      run.grid = cell.grid;
      run.cell = cell.name;
      run.cell_index = cell.index;
      run.replicate = rep;
      run.seed = base.seed + cell.index * 1000 + rep;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        RunConfig cfg = base;
        for (const auto& o : cell.overrides) apply_override(cfg, o);
        cfg.seed = run.seed;
        TrainOptions opts;
        opts.write_files = false;
        opts.periodic_eval = false;
        const TrainResult tr = train(cfg, ds, opts);
        const MetricsReport& rep_metrics = tr.final_eval.report;
        run.mean_recall = rep_metrics.mean_recall;
        run.recall = rep_metrics.recall;
        run.head_mr20 = rep_metrics.breakdown[0].head_mean;
        run.tail_mr20 = rep_metrics.breakdown[0].tail_mean;
        run.ok = true;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      if (progress) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        *progress << run.grid << '/' << run.cell << " seed " << run.seed << ": "
                  << (run.ok ? "mR@20 " + fmt(run.mean_recall[0]) : "FAILED " + run.error) << " ("
                  << fmt(std::round(secs * 10) / 10) << " s)" << std::endl;
      }
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw ContractError("median of an empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<CellAggregate> aggregate_runs(std::span<const AblationRun> runs) {
  std::vector<CellAggregate> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<std::vector<const AblationRun*>> members;
  for (const auto& r : runs) {
    auto [it, inserted] = slot.try_emplace({r.grid, r.cell}, out.size());
    if (inserted) {
      CellAggregate agg;
      agg.grid = r.grid;
      agg.cell = r.cell;
      out.push_back(std::move(agg));
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    CellAggregate& agg = out[i];
    std::array<std::vector<double>, 3> mr;
    std::vector<double> head, tail;
    for (const AblationRun* r : members[i]) {
      if (!r->ok) {
        ++agg.failed;
        continue;
      }
      ++agg.runs;
      for (std::size_t k = 0; k < 3; ++k) mr[k].push_back(r->mean_recall[k]);
      if (r->head_mr20) head.push_back(*r->head_mr20);
      if (r->tail_mr20) tail.push_back(*r->tail_mr20);
    }
    if (agg.runs == 0) continue;
    for (std::size_t k = 0; k < 3; ++k) {
      agg.median[k] = median(mr[k]);
      agg.min[k] = *std::min_element(mr[k].begin(), mr[k].end());
      agg.max[k] = *std::max_element(mr[k].begin(), mr[k].end());
    }
    if (!head.empty()) agg.head_mr20 = median(head);
    if (!tail.empty()) agg.tail_mr20 = median(tail);
  }
  return out;
}

namespace {
constexpr const char* kAblationHeader =
    "row_type,grid,cell,cell_index,replicate,seed,status,mR@20,mR@50,mR@100,R@20,R@50,R@100,"
    "head_mR@20,tail_mR@20";
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRun> runs) {
  auto out = open_out(path);
  out << kAblationHeader << '\n';
  for (const auto& r : runs) {
    out << "run," << r.grid << ',' << r.cell << ',' << r.cell_index << ',' << r.replicate << ','
        << r.seed << ',' << (r.ok ? "ok" : "failed");
    for (double v : r.mean_recall) out << ',' << (r.ok ? fmt(v) : "NA");
    for (double v : r.recall) out << ',' << (r.ok ? fmt(v) : "NA");
    out << ',' << fmt_opt(r.head_mr20) << ',' << fmt_opt(r.tail_mr20) << '\n';
  }
  for (const auto& a : aggregate_runs(runs)) {
    const std::string status = std::to_string(a.runs) + "ok/" + std::to_string(a.failed) + "failed";
    const std::array<std::pair<const char*, const std::array<double, 3>*>, 3> kinds = {
        {{"median", &a.median}, {"min", &a.min}, {"max", &a.max}}};
    for (const auto& [kind, vals] : kinds) {
      out << kind << ',' << a.grid << ',' << a.cell << ",,,," << status;
      for (double v : *vals) out << ',' << (a.runs ? fmt(v) : "NA");
      out << ",NA,NA,NA";
      if (std::string(kind) == "median") {
        out << ',' << fmt_opt(a.head_mr20) << ',' << fmt_opt(a.tail_mr20) << '\n';
      } else {
        out << ",NA,NA\n";
      }
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<AblationRun> read_ablation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kAblationHeader) {
    throw FormatError(path.string() + ": not an ablation CSV");
  }
  std::vector<AblationRun> runs;
  while (std::getline(in, line)) {
    const auto c = split_csv(line);
    if (c.size() != 15) throw FormatError(path.string() + ": expected 15 columns");
    if (c[0] != "run") continue;
    AblationRun r;
    r.grid = c[1];
    r.cell = c[2];
    r.cell_index = static_cast<std::size_t>(parse_double(c[3], "cell_index"));
    r.replicate = static_cast<std::size_t>(parse_double(c[4], "replicate"));
    r.seed = std::stoull(c[5]);
    r.ok = c[6] == "ok";
    if (r.ok) {
      for (std::size_t k = 0; k < 3; ++k) r.mean_recall[k] = parse_double(c[7 + k], "mR");
      for (std::size_t k = 0; k < 3; ++k) r.recall[k] = parse_double(c[10 + k], "R");
    }
    r.head_mr20 = parse_opt(c[13], "head_mR@20");
    r.tail_mr20 = parse_opt(c[14], "tail_mR@20");
    runs.push_back(r);
  }
  return runs;
}

void print_aggregates(std::ostream& os, std::span<const CellAggregate> cells) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-7s %-12s %5s %8s %8s %8s %8s %8s %17s\n", "grid", "cell", "runs",
                "mR@20", "mR@50", "mR@100", "head@20", "tail@20", "mR@20 range");
  os << buf;
  for (const auto& a : cells) {
    auto pct = [](std::optional<double> v) {
      char b[16];
      if (v) {
        std::snprintf(b, sizeof b, "%8.2f", 100.0 * *v);
      } else {
        std::snprintf(b, sizeof b, "%8s", "NA");
      }
      return std::string(b);
    };
    const bool any = a.runs > 0;
    std::snprintf(buf, sizeof buf, "%-7s %-12s %5zu %s %s %s %s %s   [%6.2f, %6.2f]\n",
                  a.grid.c_str(), a.cell.c_str(), a.runs,
                  pct(any ? std::optional(a.median[0]) : std::nullopt).c_str(),
                  pct(any ? std::optional(a.median[1]) : std::nullopt).c_str(),
                  pct(any ? std::optional(a.median[2]) : std::nullopt).c_str(),
                  pct(a.head_mr20).c_str(), pct(a.tail_mr20).c_str(), 100.0 * a.min[0],
                  100.0 * a.max[0]);
    os << buf;
  }
}

}  // namespace sgg
