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

// Predicate classifier over object pairs: pair features, an MLP context
// encoder, the base classifier plus frequency bias, and the optional
// semantic context module whose refined logits are fused in.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgg/dataset.hpp"
#include "sgg/nn.hpp"
#include "sgg/scm.hpp"
#include "sgg/stats.hpp"
#include "sgg/tensor.hpp"

namespace sgg {

struct ModelConfig {
  std::uint32_t num_object_classes = 15;
  std::uint32_t num_predicates = 20;
  std::uint32_t visual_dim = 32;
  std::size_t hidden = 64;
  bool frequency_bias = true;
  ScmConfig scm;
  std::uint64_t embedding_seed = 20160901;
  // Optional word-vector files replacing the random tables.
  std::string object_embeddings;
  std::string predicate_embeddings;

  std::size_t num_classes() const { return num_predicates + 1; }
  // b_s, b_o, relative layout, v_s, v_o, subject and object label embeddings.
  std::size_t pair_feature_dim() const { return kSpatialDim + 2 * visual_dim + 2 * kEmbeddingDim; }
  void validate() const;
  // Hash of everything that determines parameter shapes and scoring.
  std::uint64_t digest() const;

  static constexpr std::size_t kSpatialDim = 16;
};

struct CandidatePair {
  std::uint32_t subject = 0;
  std::uint32_t object = 0;
  std::uint32_t label = 0;  // ground-truth predicate, 0 for background
};

// Every ordered pair, subject-major.
std::vector<CandidatePair> all_pairs(const SceneInstance& scene);
// All annotated pairs followed by sampled background pairs.
std::vector<CandidatePair> sample_train_pairs(const SceneInstance& scene,
                                              const NegativeSampling& ns, std::mt19937_64& rng);

// b_s [4], b_o [4], then center offsets, log size ratios, IoU and the union
// box in image coordinates [8].
std::vector<double> spatial_features(const Box& subject, const Box& object);
// Full concatenated pair feature of length pair_feature_dim().
std::vector<double> pair_feature(const SceneInstance& scene, std::uint32_t subject,
                                 std::uint32_t object, const EmbeddingTable& object_table);

struct LossTerms {
  Value crw;    // per-scene mean over pairs, averaged over scenes
  Value sc;     // averaged over scenes with annotated relations
  Value total;
  std::size_t sc_scenes = 0;
};

struct BatchOutput {
  Value logits;       // fused z [P x C]
  Value base_logits;  // z' including frequency bias
  Value refined;      // z~, undefined when the module is disabled
  std::vector<std::size_t> offsets;  // scene s owns rows [offsets[s], offsets[s+1])
  std::optional<LossTerms> loss;
};

struct ScenePrediction {
  std::vector<CandidatePair> pairs;
  std::vector<double> logits;  // [P x C]
  std::vector<double> probs;   // [P x C]
  std::size_t num_classes = 0;
};

Value total_loss(const Value& l_crw, const Value& l_sc, bool scm_enabled);

class SggModel {
 public:
  SggModel(const ModelConfig& cfg, std::uint64_t init_seed, FrequencyBias bias);

  // class_coef (lambda * w per class) selects train mode and adds LossTerms.
  BatchOutput forward(std::span<const SceneInstance* const> scenes,
                      std::span<const std::vector<CandidatePair>> pairs,
                      const std::vector<double>* class_coef) const;

  // Eval over all ordered pairs, without recording a graph.
  ScenePrediction predict(const SceneInstance& scene) const;

  const ModelConfig& config() const { return cfg_; }
  const ParamList& parameters() const { return params_; }
  std::vector<Value> parameter_values() const;
  std::size_t parameter_count() const;
  const EmbeddingTable& object_table() const { return object_table_; }
  const EmbeddingTable& predicate_table() const { return predicate_table_; }
  const FrequencyBias& frequency_bias() const { return bias_; }
  const Value& first_layer_weight() const { return layer1_.weight; }

  // Copies arrays by name; every parameter must be present with its shape.
  void load_parameters(const std::map<std::string, std::pair<Shape, std::vector<double>>>& arrays);

 private:
  ModelConfig cfg_;
  FrequencyBias bias_;
  EmbeddingTable object_table_;
  EmbeddingTable predicate_table_;
  Linear layer1_, layer2_, classifier_;
  std::optional<SemanticContextModule> scm_;
  ParamList params_;
};

// Train-mode forward on one scene: sampled pairs, loss terms included.
BatchOutput forward_scene(const SggModel& model, const SceneInstance& scene,
                          const std::vector<double>& class_coef, const NegativeSampling& ns,
                          std::mt19937_64& rng);

// Checkpoint: "SGHT", u32 version, u64 config digest, u32 array count, then per
// array u32 name length, name, u32 rank, u64 dims, row-major f64. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const SggModel& model);
void save_checkpoint(const std::filesystem::path& path, const SggModel& model);
// Throws VersionError when the stored digest differs from expected_digest.
std::map<std::string, std::pair<Shape, std::vector<double>>> decode_checkpoint(
    std::span<const std::uint8_t> bytes, std::uint64_t expected_digest);
void load_checkpoint(const std::filesystem::path& path, SggModel& model);

}  // namespace sgg
