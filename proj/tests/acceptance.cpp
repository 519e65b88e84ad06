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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grad_suite.hpp"
#include "metric_oracle.hpp"
#include "sgg/binary_io.hpp"
#include "sgg/config.hpp"
#include "sgg/crm.hpp"
#include "sgg/dataset.hpp"
#include "sgg/metrics.hpp"
#include "sgg/model.hpp"
#include "sgg/scm.hpp"
#include "sgg/train.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sgg;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 1. With unit factors and weights the re-weighted loss is cross-entropy.
Outcome loss_reduction() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 30);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = dim(rng);
    const Value z = testing::random_const({1, c}, rng, -8.0, 8.0);
    const std::size_t label = std::uniform_int_distribution<std::size_t>(0, c - 1)(rng);
    std::vector<double> y(c, 0.0), ones(c, 1.0);
    y[label] = 1.0;
    const double crw = crw_loss(z, y, ones, ones).item();
    long double mx = -INFINITY, s = 0.0L;
    for (std::size_t k = 0; k < c; ++k) mx = std::max<long double>(mx, z.at(0, k));
    for (std::size_t k = 0; k < c; ++k) s += std::exp(static_cast<long double>(z.at(0, k)) - mx);
    const double reference = static_cast<double>(mx + std::log(s) - z.at(0, label));
    worst = std::max({worst, std::abs(crw - ce_loss(z, y).item()), std::abs(crw - reference)});
  }
  return {worst <= 1e-12, "max |L_CRW - L_CE| = " + fmt("%.3g", worst) + " over 100 pairs"};
}

// 2. Schedule values at the named iterations.
Outcome schedule_exactness() {
  ScheduleSpec lin;
  lin.kind = ScheduleKind::kLinear;
  lin.total_iters = 3000;
  ScheduleSpec ex = lin;
  ex.kind = ScheduleKind::kExponential;
  ex.nu = 0.1;
  ScheduleSpec co = lin;
  co.kind = ScheduleKind::kCosine;
  const HeadSet head{1};
  const double lam = lambda_factor(lin, 2700, head, 3)[1];
  const std::vector<std::pair<double, double>> cases = {
      {phi(lin, 1500), 0.5}, {phi(lin, 3000), 0.0}, {phi(ex, 3000), 0.1},
      {phi(co, 3000), 0.0},  {lam, 0.25}};
  double worst = 0.0;
  for (const auto& [got, want] : cases) worst = std::max(worst, std::abs(got - want));
  return {worst <= 1e-12, "max deviation " + fmt("%.3g", worst) + " over 5 values"};
}

// 3. Every primitive and the full objective against central differences.
Outcome gradient_suite() {
  double prim_worst = 0.0, full_worst = 0.0;
  std::string prim_name;
  std::size_t checked = 0, kinks = 0;
  for (int seed = 1; seed <= testing::kGradSeeds; ++seed) {
    testing::primitive_grad_suite(static_cast<std::uint64_t>(seed),
                                  [&](const std::string& name, double err) {
                                    if (err > prim_worst) {
                                      prim_worst = err;
                                      prim_name = name;
                                    }
                                  });
    const auto r = testing::total_loss_grad_check(static_cast<std::uint64_t>(seed));
    full_worst = std::max(full_worst, r.worst);
    checked += r.checked;
    kinks += r.kinks;
  }
  const bool kinks_rare = static_cast<double>(kinks) < 0.1 * static_cast<double>(checked + kinks);
  const bool pass = prim_worst < testing::kGradTol && full_worst < testing::kGradTol && kinks_rare;
  return {pass, "20 seeds: primitives max rel err " + fmt("%.2e", prim_worst) + " (" + prim_name +
                    "), L_total max rel err " + fmt("%.2e", full_worst) + " on " +
                    std::to_string(checked) + " entries, " + std::to_string(kinks) +
                    " skipped at relu kinks"};
}

// 4. R@K and mR@K against the brute-force matcher, integer counts.
Outcome metrics_oracle() {
  const std::size_t c = 8;
  std::size_t compared = 0, mismatches = 0;
  for (bool gc : {true, false}) {
    const auto scenes = testing::random_scenes(200, c, gc ? 11 : 12);
    std::vector<RankedTriplets> pred;
    std::vector<std::vector<Relation>> gt;
    for (const auto& s : scenes) {
      pred.push_back(rank_triplets(s.pairs, s.probs, c, gc));
      gt.push_back(s.gt);
    }
    for (std::size_t k : kRecallKs) {
      const auto o = testing::brute_force(scenes, c, k, gc);
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (o.scene_gt[s] == 0) continue;
        acc += static_cast<double>(o.scene_hits[s]) / static_cast<double>(o.scene_gt[s]);
        ++n;
      }
      const ClassRecall cr = mean_recall_at_k(pred, gt, k, c);
      double m = 0.0;
      std::size_t present = 0;
      for (std::size_t q = 1; q < c; ++q) {
        if (o.class_gt[q] == 0) continue;
        m += static_cast<double>(o.class_hits[q]) / static_cast<double>(o.class_gt[q]);
        ++present;
      }
      compared += 4;
      mismatches += recall_at_k(pred, gt, k) != acc / static_cast<double>(n);
      mismatches += cr.hits != o.class_hits;
      mismatches += cr.gt_count != o.class_gt;
      mismatches += cr.mean != m / static_cast<double>(present);
    }
  }
  return {mismatches == 0, std::to_string(compared) + " comparisons (GC on/off, K=20/50/100), " +
                               std::to_string(mismatches) + " mismatches"};
}

// 5. Context-module identities.
Outcome scm_identities() {
  std::mt19937_64 rng(5);
  bool ok = true;
  std::vector<std::string> notes;
  const Value x = testing::random_const({1, 64}, rng);
  if (sc_loss(x, x).item() != 0.0) {
    ok = false;
    notes.push_back("sc_loss(x,x) != 0");
  }
  for (std::size_t d : {1u, 16u, 64u, 600u}) {
    std::uniform_int_distribution<int> q(-64, 64);
    std::vector<double> t(d), s(d);
    for (std::size_t i = 0; i < d; ++i) {
      t[i] = q(rng) / 16.0;
      s[i] = t[i] + 1.0;
    }
    if (sc_loss(Value::constant({1, d}, s), Value::constant({1, d}, t)).item() != 1.0) {
      ok = false;
      notes.push_back("all-ones difference != 1 at D=" + std::to_string(d));
    }
  }
  const auto v = testing::random_vector(64, rng);
  std::vector<double> rows;
  for (int i = 0; i < 5; ++i) rows.insert(rows.end(), v.begin(), v.end());
  const Value g = global_node(Value::constant({5, 64}, rows));
  double gdev = 0.0;
  for (std::size_t i = 0; i < 64; ++i) gdev = std::max(gdev, std::abs(g.at(0, i) - v[i]));
  if (gdev > 1e-15) {
    ok = false;
    notes.push_back("global_node of equal rows deviates by " + fmt("%.3g", gdev));
  }
  const std::size_t d = 64, n = 7;
  const TransformerEncoder enc(d, 2, 4, rng);
  const Value trip = testing::random_const({n, d}, rng);
  const ContextOutput ref = encode_context(trip, single_segment(n), enc, ScmVariant::kGlobal);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const ContextOutput out =
        encode_context(gather_rows(trip, perm), single_segment(n), enc, ScmVariant::kGlobal);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c)
        worst = std::max(worst, std::abs(out.triplets.at(i, c) - ref.triplets.at(perm[i], c)));
    for (std::size_t c = 0; c < d; ++c)
      worst = std::max(worst, std::abs(out.global.at(0, c) - ref.global.at(0, c)));
  }
  if (worst >= 1e-10) ok = false;
  std::string detail = "sc_loss identities exact, global node exact, permutation error " +
                       fmt("%.2e", worst);
  for (const auto& s : notes) detail += "; " + s;
  return {ok, detail};
}

struct AblationSummary {
  bool ran = false;
  std::string error;
  double base = 0, crm = 0, scm = 0, full = 0;
  std::optional<double> base_head, full_head;
  double seconds = 0;
};

double cell_median(const std::vector<CellAggregate>& agg, const std::string& cell) {
  for (const auto& a : agg)
    if (a.cell == cell) return a.median[0];
  return NAN;
}

std::optional<double> cell_head(const std::vector<CellAggregate>& agg, const std::string& cell) {
  for (const auto& a : agg)
    if (a.cell == cell) return a.head_mr20;
  return std::nullopt;
}

// Criteria 6 and 7 share these 20 runs of the desk profile.
AblationSummary desk_ablation(const fs::path& out_dir) {
  AblationSummary s;
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.out = (out_dir / "ablation").string();
  const Dataset ds = obtain_dataset(cfg);
  const auto runs = run_ablation(cfg, ds, ablation_cells("table3"), 5, &std::cout);
  fs::create_directories(cfg.out);
  write_ablation_csv(fs::path(cfg.out) / "ablation_table3.csv", runs);
  for (const auto& r : runs) {
    if (!r.ok) s.error += r.cell + " seed " + std::to_string(r.seed) + ": " + r.error + "; ";
  }
  const auto agg = aggregate_runs(runs);
  print_aggregates(std::cout, agg);
  s.ran = true;
  s.base = cell_median(agg, "baseline");
  s.crm = cell_median(agg, "crm");
  s.scm = cell_median(agg, "scm");
  s.full = cell_median(agg, "crm+scm");
  s.base_head = cell_head(agg, "baseline");
  s.full_head = cell_head(agg, "crm+scm");
  s.seconds = seconds_since(t0);
  return s;
}

Outcome directional(const AblationSummary& s) {
  if (!s.error.empty()) return {false, "failed runs: " + s.error};
  const double full = 100 * (s.full - s.base), crm = 100 * (s.crm - s.base),
               scm = 100 * (s.scm - s.base);
  const bool pass = full >= 2.0 && crm >= 1.0 && scm >= 1.0 && s.seconds < 1800.0;
  return {pass, "median mR@20 baseline " + fmt("%.2f", 100 * s.base) + ", crm " +
                    fmt("%.2f", 100 * s.crm) + " (" + fmt("%+.2f", crm) + "), scm " +
                    fmt("%.2f", 100 * s.scm) + " (" + fmt("%+.2f", scm) + "), crm+scm " +
                    fmt("%.2f", 100 * s.full) + " (" + fmt("%+.2f", full) + "); 20 runs in " +
                    fmt("%.0f", s.seconds) + " s"};
}

Outcome head_retention(const AblationSummary& s) {
  if (!s.base_head || !s.full_head) return {false, "head recall unavailable"};
  const double ratio = *s.full_head / *s.base_head;
  return {ratio >= 0.8, "median head mR@20 baseline " + fmt("%.2f", 100 * *s.base_head) +
                            ", crm+scm " + fmt("%.2f", 100 * *s.full_head) + ", ratio " +
                            fmt("%.3f", ratio) + " (needs >= 0.8)"};
}

// 8. Repeated runs, checkpoint and dataset round-trips.
Outcome determinism(const fs::path& out_dir) {
  RunConfig cfg;
  cfg.total_iters = 40;
  cfg.eval_interval = 20;
  cfg.log_interval = 10;
  const Dataset ds = obtain_dataset(cfg);
  const fs::path a = out_dir / "determinism_a", b = out_dir / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  cfg.out = a.string();
  const TrainResult ra = train(cfg, ds);
  cfg.out = b.string();
  train(cfg, ds);
  std::vector<std::string> differ;
  for (const char* f : {"final.ckpt", "best.ckpt", "metrics.csv", "per_class.csv",
                        "predictions.tsv", "top5.txt"}) {
    if (slurp(a / f) != slurp(b / f) || slurp(a / f).empty()) differ.push_back(f);
  }
  const auto la = read_train_log(a / "train_log.csv");
  const auto lb = read_train_log(b / "train_log.csv");
  bool logs_equal = la.size() == lb.size();
  for (std::size_t i = 0; logs_equal && i < la.size(); ++i) {
    logs_equal = la[i].iter == lb[i].iter && la[i].lambda == lb[i].lambda &&
                 la[i].l_crw == lb[i].l_crw && la[i].l_sc == lb[i].l_sc &&
                 la[i].l_total == lb[i].l_total;
  }
  if (!logs_equal) differ.push_back("train_log.csv (excluding wall_ms)");

  const PreparedData prep = prepare_data(cfg, ds);
  auto fresh = make_model(cfg, ds, prep);
  load_checkpoint(a / "final.ckpt", *fresh);
  const bool ckpt_rt = encode_checkpoint(*fresh) == read_file_bytes(a / "final.ckpt") &&
                       encode_checkpoint(*fresh) == encode_checkpoint(*ra.model);
  const fs::path dpath = out_dir / "determinism.sgds";
  save_dataset(dpath, ds);
  const Dataset back = load_dataset(dpath);
  const bool ds_rt = back == ds && encode_dataset(back) == read_file_bytes(dpath);
  const bool pass = differ.empty() && ckpt_rt && ds_rt;
  std::string detail = "two 40-iteration runs: ";
  detail += differ.empty() ? "all artifacts identical" : "differ in";
  for (const auto& f : differ) detail += " " + f;
  detail += std::string("; checkpoint round-trip ") + (ckpt_rt ? "exact" : "MISMATCH");
  detail += std::string("; dataset round-trip ") + (ds_rt ? "exact" : "MISMATCH");
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "Scratch directory for run artifacts");
  app.add_option("--only", only, "Run only these criteria (with 7 implying 6)");
  CLI11_PARSE(app, argc, argv);
  const fs::path out_dir = out;
  fs::create_directories(out_dir);
  auto wanted = [&](int n) {
    return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
  };

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  AblationSummary ablation;
  auto ensure_ablation = [&]() -> const AblationSummary& {
    if (!ablation.ran) {
      try {
        ablation = desk_ablation(out_dir);
      } catch (const std::exception& e) {
        ablation.ran = true;
        ablation.error = e.what();
      }
    }
    return ablation;
  };
  const std::vector<Criterion> criteria = {
      {1, "loss reduction identity", 1.0, loss_reduction},
      {2, "schedule exactness", 1.0, schedule_exactness},
      {3, "gradient suite", 120.0, gradient_suite},
      {4, "metrics oracle equivalence", 30.0, metrics_oracle},
      {5, "context module identities", 10.0, scm_identities},
      {6, "directional ablation", 1800.0, [&] { return directional(ensure_ablation()); }},
      {7, "head retention", 1800.0, [&] { return head_retention(ensure_ablation()); }},
      {8, "determinism and persistence", 60.0, [&] { return determinism(out_dir); }},
  };

  std::vector<std::string> lines;
  bool all = true;
  for (const auto& c : criteria) {
    if (!wanted(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = seconds_since(t0);
    // The shared ablation is charged to criterion 6; criterion 7 reuses it.
    if (c.id == 6 || c.id == 7) secs = ablation.seconds;
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    all = all && pass;
    char head[160];
    std::snprintf(head, sizeof head, "Criterion %d (%s): %s [%.2f s, budget %.0f s%s] ", c.id,
                  c.name, pass ? "PASS" : "FAIL", secs, c.budget_s,
                  in_budget ? "" : ", over budget");
    lines.push_back(std::string(head) + o.detail);
    std::cout << lines.back() << std::endl;
  }
  std::cout << "\nSummary\n";
  for (const auto& l : lines) std::cout << l << '\n';
  return all ? 0 : 1;
}
