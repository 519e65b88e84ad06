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

#include "sgg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "sgg/errors.hpp"

namespace sgg {

RankedTriplets rank_triplets(std::span<const PairScores> pairs, std::span<const double> probs,
                             std::size_t num_classes, bool graph_constraint) {
  if (probs.size() != pairs.size() * num_classes) {
    throw DimensionError("rank_triplets: score matrix does not match pair count");
  }
  RankedTriplets out;
  out.reserve(graph_constraint ? pairs.size() : pairs.size() * (num_classes - 1));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double* row = probs.data() + i * num_classes;
    if (graph_constraint) {
      std::size_t best = 1;
      for (std::size_t c = 2; c < num_classes; ++c)
        if (row[c] > row[best]) best = c;
      out.push_back({pairs[i].subject, pairs[i].object, static_cast<std::uint32_t>(best), row[best],
                     static_cast<std::uint32_t>(i)});
    } else {
      for (std::size_t c = 1; c < num_classes; ++c) {
        out.push_back({pairs[i].subject, pairs[i].object, static_cast<std::uint32_t>(c), row[c],
                       static_cast<std::uint32_t>(i)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RankedTriplet& a, const RankedTriplet& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.pair_index, a.predicate) < std::tie(b.pair_index, b.predicate);
  });
  return out;
}

namespace {

using TripletKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;

std::set<TripletKey> top_k(const RankedTriplets& ranked, std::size_t k) {
  std::set<TripletKey> out;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace(ranked[i].subject, ranked[i].object, ranked[i].predicate);
  }
  return out;
}

void check_inputs(std::span<const RankedTriplets> predictions,
                  std::span<const std::vector<Relation>> gt, std::size_t k) {
  if (k < 1) throw ContractError("recall: k must be >= 1");
  if (predictions.size() != gt.size()) {
    throw DimensionError("recall: prediction and ground-truth scene counts differ");
  }
  const bool any = std::any_of(gt.begin(), gt.end(), [](const auto& g) { return !g.empty(); });
  if (!any) throw MetricError("recall: no scene has ground-truth triplets");
}

}  // namespace

double recall_at_k(std::span<const RankedTriplets> predictions,
                   std::span<const std::vector<Relation>> gt, std::size_t k) {
  check_inputs(predictions, gt, k);
  double acc = 0.0;
  std::size_t scenes = 0;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (gt[s].empty()) continue;
    const auto top = top_k(predictions[s], k);
    std::size_t hit = 0;
    for (const auto& r : gt[s]) hit += top.count({r.subject, r.object, r.predicate});
    acc += static_cast<double>(hit) / static_cast<double>(gt[s].size());
    ++scenes;
  }
  return acc / static_cast<double>(scenes);
}

ClassRecall mean_recall_at_k(std::span<const RankedTriplets> predictions,
                             std::span<const std::vector<Relation>> gt, std::size_t k,
                             std::size_t num_classes) {
  check_inputs(predictions, gt, k);
  ClassRecall cr;
  cr.gt_count.assign(num_classes, 0);
  cr.hits.assign(num_classes, 0);
  cr.recall.assign(num_classes, 0.0);
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (gt[s].empty()) continue;
    const auto top = top_k(predictions[s], k);
    for (const auto& r : gt[s]) {
      if (r.predicate == 0 || r.predicate >= num_classes) {
        throw DataError("mean_recall: ground-truth predicate out of range");
      }
      ++cr.gt_count[r.predicate];
      cr.hits[r.predicate] += static_cast<std::int64_t>(top.count({r.subject, r.object, r.predicate}));
    }
  }
  double acc = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (cr.gt_count[c] == 0) continue;
    cr.recall[c] = static_cast<double>(cr.hits[c]) / static_cast<double>(cr.gt_count[c]);
    acc += cr.recall[c];
    ++present;
  }
  cr.mean = acc / static_cast<double>(present);
  return cr;
}

Breakdown breakdown_report(std::span<const double> per_class, std::span<const std::int64_t> gt_count,
                           const HeadSet& head_set) {
  if (per_class.size() != gt_count.size()) throw DimensionError("breakdown: length mismatch");
  double head = 0.0, tail = 0.0;
  std::size_t nh = 0, nt = 0;
  for (std::size_t c = 1; c < per_class.size(); ++c) {
    if (gt_count[c] <= 0) continue;
    if (head_set.count(static_cast<std::uint32_t>(c))) {
      head += per_class[c];
      ++nh;
    } else {
      tail += per_class[c];
      ++nt;
    }
  }
  Breakdown b;
  if (nh > 0) b.head_mean = head / static_cast<double>(nh);
  if (nt > 0) b.tail_mean = tail / static_cast<double>(nt);
  return b;
}

MetricsReport evaluate_rankings(std::span<const RankedTriplets> predictions,
                                std::span<const std::vector<Relation>> gt,
                                std::size_t num_classes, const HeadSet& head_set) {
  MetricsReport rep;
  rep.scene_count = gt.size();
  rep.head_set = head_set;
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) {
    rep.recall[i] = recall_at_k(predictions, gt, kRecallKs[i]);
    rep.per_class[i] = mean_recall_at_k(predictions, gt, kRecallKs[i], num_classes);
    rep.mean_recall[i] = rep.per_class[i].mean;
    rep.breakdown[i] = breakdown_report(rep.per_class[i].recall, rep.per_class[i].gt_count, head_set);
  }
  return rep;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "metric,k,value\n";
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) out << "R," << kRecallKs[i] << ',' << fmt(report.recall[i]) << '\n';
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) out << "mR," << kRecallKs[i] << ',' << fmt(report.mean_recall[i]) << '\n';
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) out << "head_mR," << kRecallKs[i] << ',' << fmt(report.breakdown[i].head_mean) << '\n';
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) out << "tail_mR," << kRecallKs[i] << ',' << fmt(report.breakdown[i].tail_mean) << '\n';
  out << "scenes,0," << report.scene_count << '\n';
}

void write_per_class_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "class_id,count,recall@20,recall@50,recall@100,is_head\n";
  const std::size_t c = report.per_class[0].gt_count.size();
  for (std::size_t k = 1; k < c; ++k) {
    out << k << ',' << report.per_class[0].gt_count[k];
    for (const auto& pc : report.per_class) out << ',' << fmt(pc.recall[k]);
    out << ',' << (report.head_set.count(static_cast<std::uint32_t>(k)) ? 1 : 0) << '\n';
  }
}

}  // namespace sgg
