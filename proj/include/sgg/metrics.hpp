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

// Recall@K and mean Recall@K under the predicate-classification protocol:
// boxes and labels are given, so a triplet matches on exact subject index,
// object index and predicate.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sgg/dataset.hpp"
#include "sgg/stats.hpp"

namespace sgg {

struct RankedTriplet {
  std::uint32_t subject = 0;
  std::uint32_t object = 0;
  std::uint32_t predicate = 0;
  double score = 0.0;
  std::uint32_t pair_index = 0;
};

// Sorted by score descending, ties by (pair index, predicate) ascending.
using RankedTriplets = std::vector<RankedTriplet>;

struct PairScores {
  std::uint32_t subject = 0;
  std::uint32_t object = 0;
};

// probs is [pairs x C] with C = R + 1; background (column 0) never ranks.
// With the graph constraint only each pair's best predicate is kept.
RankedTriplets rank_triplets(std::span<const PairScores> pairs, std::span<const double> probs,
                             std::size_t num_classes, bool graph_constraint);

// Per scene, the fraction of GT triplets inside the top k, averaged over
// scenes that have at least one GT triplet.
double recall_at_k(std::span<const RankedTriplets> predictions,
                   std::span<const std::vector<Relation>> gt, std::size_t k);

struct ClassRecall {
  std::vector<std::int64_t> gt_count;  // [R+1]
  std::vector<std::int64_t> hits;      // [R+1]
  std::vector<double> recall;          // [R+1], 0 where gt_count == 0
  double mean = 0.0;                   // over classes with gt_count > 0
};

// GT instances pooled across scenes per class.
ClassRecall mean_recall_at_k(std::span<const RankedTriplets> predictions,
                             std::span<const std::vector<Relation>> gt, std::size_t k,
                             std::size_t num_classes);

struct Breakdown {
  std::optional<double> head_mean;  // over head classes minus background
  std::optional<double> tail_mean;  // over the rest
};

// Only classes with gt_count > 0 take part; background is always excluded.
Breakdown breakdown_report(std::span<const double> per_class, std::span<const std::int64_t> gt_count,
                           const HeadSet& head_set);

inline constexpr std::array<std::size_t, 3> kRecallKs = {20, 50, 100};

struct MetricsReport {
  std::array<double, 3> recall{};
  std::array<double, 3> mean_recall{};
  std::array<ClassRecall, 3> per_class;
  std::array<Breakdown, 3> breakdown;
  std::size_t scene_count = 0;
  HeadSet head_set;

  double mr20() const { return mean_recall[0]; }
};

MetricsReport evaluate_rankings(std::span<const RankedTriplets> predictions,
                                std::span<const std::vector<Relation>> gt,
                                std::size_t num_classes, const HeadSet& head_set);

// `metric,k,value` rows.
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
// `class_id,count,recall@20,recall@50,recall@100,is_head` rows.
void write_per_class_csv(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace sgg
