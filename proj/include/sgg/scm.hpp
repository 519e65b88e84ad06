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

// Semantic context module: triplet semantics, a transformer encoder over the
// triplets of each scene, the semantic-consistency loss, and the refined
// logits that are fused with the base classifier.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgg/nn.hpp"
#include "sgg/stats.hpp"
#include "sgg/tensor.hpp"

namespace sgg {

enum class ScmVariant {
  kGlobal,  // mean node appended to the sequence, read back after encoding
  kMean,    // no extra node; mean of the encoded triplets
};

ScmVariant parse_scm_variant(const std::string& s);
std::string to_string(ScmVariant v);

struct ScmConfig {
  bool enabled = true;
  ScmVariant variant = ScmVariant::kGlobal;
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  // Use the argmax predicate's embedding instead of the probability mixture.
  bool argmax_predicate = false;

  void validate() const;
};

// concat([s_s; s_p; s_o]) * W for rows of 200-d inputs and W [600 x D].
Value triplet_semantic(const Value& subject, const Value& predicate, const Value& object,
                       const Value& projection);

// Mean of the triplet rows [N x D] -> [1 x D].
Value global_node(const Value& triplets);

// (1/D) * ||s - t||^2 for [1 x D] rows.
Value sc_loss(const Value& s_global, const Value& t_global);

// z' + z~
Value fuse_logits(const Value& z_prime, const Value& z_tilde);

// Post-norm encoder layer: LN(x + MHA(x)) then LN(h + FFN(h)), FFN width 2D.
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(std::size_t dim, std::size_t heads, std::mt19937_64& rng);

  Value operator()(const Value& x, const Segments& segments) const;
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  MultiHeadAttention attn_;
  LayerNorm ln1_, ln2_;
  Linear ff1_, ff2_;
};

class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(std::size_t dim, std::size_t layers, std::size_t heads, std::mt19937_64& rng);

  // No positional encoding: equivariant to permutations within a segment.
  Value operator()(const Value& x, const Segments& segments) const;
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  std::vector<EncoderLayer> layers_;
};

// Runs the encoder over per-scene triplet rows. `scene_rows` lists, per scene,
// the rows of `triplets` that belong to it. Returns the contextual triplet rows
// (same order as `triplets`) and one global row per scene.
struct ContextOutput {
  Value triplets;  // [P x D]
  Value global;    // [S x D]
};

ContextOutput encode_context(const Value& triplets, const Segments& scene_rows,
                             const TransformerEncoder& encoder, ScmVariant variant);

class SemanticContextModule {
 public:
  SemanticContextModule() = default;
  SemanticContextModule(const ScmConfig& cfg, std::size_t num_classes, std::mt19937_64& rng);

  // Triplet semantics for P pairs from object labels and predicate
  // probabilities [P x (R+1)]. Projects the embedding tables once and gathers,
  // which equals triplet_semantic on the concatenated embeddings.
  Value project(std::span<const std::size_t> subject_labels,
                std::span<const std::size_t> object_labels, const Value& predicate_prob,
                const EmbeddingTable& object_table, const EmbeddingTable& predicate_table) const;

  ContextOutput encode(const Value& triplets, const Segments& scene_rows) const;
  // Refined logits z~ for contextual triplet rows.
  Value refine(const Value& contextual) const { return classifier_(contextual); }

  void collect(ParamList& out, const std::string& prefix) const;

  const ScmConfig& config() const { return cfg_; }
  const Value& projection() const { return projection_; }
  const TransformerEncoder& encoder() const { return encoder_; }

 private:
  ScmConfig cfg_;
  Value projection_;  // W [600 x D]
  TransformerEncoder encoder_;
  Linear classifier_;
};

}  // namespace sgg
