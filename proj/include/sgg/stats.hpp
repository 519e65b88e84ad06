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

// Dataset statistics and frozen embedding tables.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "sgg/dataset.hpp"
#include "sgg/tensor.hpp"

namespace sgg {

using HeadSet = std::set<std::uint32_t>;

struct ClassStats {
  std::vector<std::int64_t> counts;  // [R+1], index 0 is background
  std::vector<double> weights;       // [R+1]
  HeadSet head_set;
  std::int64_t total = 0;

  std::size_t num_classes() const { return counts.size(); }
};

// Background pairs drawn per scene during training.
struct NegativeSampling {
  std::uint32_t ratio = 3;  // negatives per annotated relation
  std::uint32_t cap = 64;   // total pairs per scene
};

std::uint32_t negatives_for_scene(const SceneInstance& scene, const NegativeSampling& ns);

// Counts and total only; weights and head set are filled by the callers below.
ClassStats count_predicates(std::span<const SceneInstance> scenes, std::uint32_t num_predicates,
                            const NegativeSampling& ns = {});
ClassStats count_predicates(const Dataset& ds, std::span<const std::size_t> indices,
                            const NegativeSampling& ns = {});

// Effective-number weights (1 - beta) / (1 - beta^n), normalized to mean 1
// over classes with n > 0. Classes with n == 0 get 1.
std::vector<double> class_balanced_weights(std::span<const std::int64_t> counts, double beta);

// Background plus the smallest count-ordered prefix of predicates whose
// share of the non-background total reaches rho.
HeadSet select_head_set(std::span<const std::int64_t> counts, double rho);

class FrequencyBias {
 public:
  FrequencyBias() = default;
  FrequencyBias(std::uint32_t num_classes,
                std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> table);

  // Log-distribution over R+1 classes; uniform for unseen pairs.
  std::span<const double> lookup(std::uint32_t subject_label, std::uint32_t object_label) const;
  std::uint32_t num_classes() const { return num_classes_; }
  const auto& table() const { return table_; }

 private:
  std::uint32_t num_classes_ = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> table_;
  std::vector<double> uniform_;
};

// Counts every ordered pair of each scene: annotated pairs count their
// predicate, all other pairs count background.
FrequencyBias build_frequency_bias(std::span<const SceneInstance> scenes,
                                   std::uint32_t num_predicates, double smoothing = 1e-3);
FrequencyBias build_frequency_bias(const Dataset& ds, std::span<const std::size_t> indices,
                                   double smoothing = 1e-3);

inline constexpr std::size_t kEmbeddingDim = 200;

// Frozen [vocab x 200] table as a constant Value.
struct EmbeddingTable {
  Value rows;

  std::size_t vocab() const { return rows.rows(); }
  std::span<const double> row(std::size_t i) const {
    return rows.data().subspan(i * kEmbeddingDim, kEmbeddingDim);
  }
};

// Entries uniform in [-0.1, 0.1].
EmbeddingTable random_embedding_table(std::size_t vocab, std::uint64_t seed);

// Plain-text word vectors: `token v1 ... v200` per line, rows in file order.
// The file must hold at least `vocab` rows; extra rows are ignored.
EmbeddingTable load_embedding_text(const std::filesystem::path& path, std::size_t vocab);

// prob [N x V] times table -> [N x 200]; rows of prob must be distributions.
Value embed_soft(const Value& prob, const EmbeddingTable& table);
// Row of the most probable class, not differentiable with respect to prob.
Value embed_argmax(const Value& prob, const EmbeddingTable& table);

}  // namespace sgg
