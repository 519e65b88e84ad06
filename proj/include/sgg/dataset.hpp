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

// Synthetic long-tailed scene graphs and the SGDS dataset file.

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sgg {

struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  bool operator==(const Box&) const = default;
};

struct Relation {
  std::uint32_t subject = 0;
  std::uint32_t object = 0;
  std::uint32_t predicate = 0;  // 1..R; 0 is background and never annotated

  auto operator<=>(const Relation&) const = default;
};

struct SceneInstance {
  std::vector<Box> boxes;
  std::vector<std::uint32_t> labels;  // 1..O
  std::vector<double> visuals;        // num_objects x visual_dim, row-major
  std::size_t visual_dim = 0;
  std::vector<Relation> relations;

  std::size_t num_objects() const { return boxes.size(); }
  std::span<const double> visual(std::size_t i) const {
    return std::span(visuals).subspan(i * visual_dim, visual_dim);
  }
  bool operator==(const SceneInstance&) const = default;
};

struct GenConfig {
  std::uint32_t num_scenes = 2000;
  std::uint32_t min_objects = 4;
  std::uint32_t max_objects = 9;
  std::uint32_t num_object_classes = 15;  // O
  std::uint32_t num_predicates = 20;      // R, excluding background
  double zipf_s = 1.5;
  std::uint32_t min_relations = 2;
  std::uint32_t max_relations = 6;
  std::uint32_t visual_dim = 32;
  // Per-coordinate visual noise, in units of the base prototype norm.
  double noise = 0.3;
  // Latent scene contexts; each tail predicate lives in exactly one.
  std::uint32_t num_contexts = 4;
  // Norm of a tail's offset from its parent head prototype.
  double tail_offset = 0.5;
  // Probability that an object label is drawn from the scene context's pool.
  double context_label_prob = 0.35;
  std::uint64_t seed = 7;

  void validate() const;
  bool operator==(const GenConfig&) const = default;
};

struct Dataset {
  GenConfig config;
  std::vector<SceneInstance> scenes;

  bool operator==(const Dataset&) const = default;
};

// Latent taxonomy used by the generator: the first `num_bases` predicates are
// head bases; every other predicate refines one base inside one context.
struct PredicateTaxonomy {
  std::uint32_t num_bases = 0;
  std::vector<std::uint32_t> parent;   // [R+1], parent[c] == c for bases
  std::vector<std::uint32_t> context;  // [R+1], unused for bases
};

PredicateTaxonomy make_taxonomy(const GenConfig& cfg);

// Below this many scenes the generator does not insist that every bottom-half
// predicate appears in the test split.
inline constexpr std::size_t kTailCoverageMinScenes = 500;

// Deterministic given cfg.seed. For R <= 25 and at least
// kTailCoverageMinScenes scenes, whole datasets are regenerated until every
// bottom-half predicate has a test-split instance.
Dataset generate_dataset(const GenConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// 80/20 split keyed on a hash of (seed, scene index).
bool is_test_scene(std::uint64_t seed, std::size_t index);
Split split_dataset(const Dataset& ds);

// Checks the SceneInstance invariants, throwing DataError on violation.
void validate_scene(const SceneInstance& scene, const GenConfig& cfg);

inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

// One JSON object per scene, for inspection only.
void export_jsonl(const std::filesystem::path& path, const Dataset& ds);

}  // namespace sgg
