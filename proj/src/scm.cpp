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

#include "sgg/scm.hpp"

#include <algorithm>
#include <array>

#include "sgg/errors.hpp"

namespace sgg {

ScmVariant parse_scm_variant(const std::string& s) {
  if (s == "global") return ScmVariant::kGlobal;
  if (s == "mean") return ScmVariant::kMean;
  throw ConfigError("unknown scm variant '" + s + "' (global, mean)");
}

std::string to_string(ScmVariant v) { return v == ScmVariant::kGlobal ? "global" : "mean"; }

void ScmConfig::validate() const {
  if (d_model < 2) throw ConfigError("scm: d_model must be >= 2");
  if (layers < 1) throw ConfigError("scm: layers must be >= 1");
  if (heads < 1 || d_model % heads != 0) {
    throw ConfigError("scm: d_model " + std::to_string(d_model) + " not divisible by heads " +
                      std::to_string(heads));
  }
}

Value triplet_semantic(const Value& subject, const Value& predicate, const Value& object,
                       const Value& projection) {
  for (const Value* v : {&subject, &predicate, &object}) {
    if (v->cols() != kEmbeddingDim) {
      throw DimensionError("triplet_semantic: inputs must be 200-dimensional, got " +
                           v->shape().str());
    }
  }
  if (projection.rows() != 3 * kEmbeddingDim) {
    throw DimensionError("triplet_semantic: projection must have 600 rows, got " +
                         projection.shape().str());
  }
  const std::array<Value, 3> parts{subject, predicate, object};
  return matmul(concat_cols(parts), projection);
}

Value global_node(const Value& triplets) {
  if (triplets.rows() == 0) throw ContractError("global_node: no triplets");
  return segment_mean(triplets, single_segment(triplets.rows()));
}

Value sc_loss(const Value& s_global, const Value& t_global) {
  if (s_global.shape() != t_global.shape() || s_global.rows() != 1) {
    throw DimensionError("sc_loss: expects two [1 x D] rows, got " + s_global.shape().str() +
                         " and " + t_global.shape().str());
  }
  const Value d = sub(s_global, t_global);
  return scale(sum(mul(d, d)), 1.0 / static_cast<double>(s_global.cols()));
}

Value fuse_logits(const Value& z_prime, const Value& z_tilde) {
  if (z_prime.shape() != z_tilde.shape()) {
    throw DimensionError("fuse_logits: " + z_prime.shape().str() + " vs " + z_tilde.shape().str());
  }
  return add(z_prime, z_tilde);
}

EncoderLayer::EncoderLayer(std::size_t dim, std::size_t heads, std::mt19937_64& rng)
    : attn_(dim, heads, rng),
      ln1_(dim),
      ln2_(dim),
      ff1_(dim, 2 * dim, rng),
      ff2_(2 * dim, dim, rng) {}

Value EncoderLayer::operator()(const Value& x, const Segments& segments) const {
  const Value h = ln1_(add(x, attn_(x, segments)));
  return ln2_(add(h, ff2_(relu(ff1_(h)))));
}

void EncoderLayer::collect(ParamList& out, const std::string& prefix) const {
  attn_.collect(out, prefix + ".attn");
  ln1_.collect(out, prefix + ".ln1");
  ff1_.collect(out, prefix + ".ff1");
  ff2_.collect(out, prefix + ".ff2");
  ln2_.collect(out, prefix + ".ln2");
}

TransformerEncoder::TransformerEncoder(std::size_t dim, std::size_t layers, std::size_t heads,
                                       std::mt19937_64& rng) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("encoder: width " + std::to_string(dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
  layers_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) layers_.emplace_back(dim, heads, rng);
}

Value TransformerEncoder::operator()(const Value& x, const Segments& segments) const {
  Value h = x;
  for (const auto& layer : layers_) h = layer(h, segments);
  return h;
}

void TransformerEncoder::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(out, prefix + ".layer" + std::to_string(i));
  }
}

ContextOutput encode_context(const Value& triplets, const Segments& scene_rows,
                             const TransformerEncoder& encoder, ScmVariant variant) {
  if (scene_rows.empty()) throw ContractError("encode_context: no scenes");
  const std::size_t p = triplets.rows();
  if (variant == ScmVariant::kMean) {
    const Value enc = encoder(triplets, scene_rows);
    return {enc, segment_mean(enc, scene_rows)};
  }
  // Global node is appended after all triplets and listed last in its segment.
  const Value globals = segment_mean(triplets, scene_rows);
  const std::array<Value, 2> parts{triplets, globals};
  const Value seq = concat_rows(parts);
  Segments segs = scene_rows;
  for (std::size_t s = 0; s < segs.size(); ++s) segs[s].push_back(p + s);
  const Value enc = encoder(seq, segs);
  return {slice_rows(enc, 0, p), slice_rows(enc, p, scene_rows.size())};
}

SemanticContextModule::SemanticContextModule(const ScmConfig& cfg, std::size_t num_classes,
                                             std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg_.validate();
  projection_ = xavier(3 * kEmbeddingDim, cfg_.d_model, rng);
  encoder_ = TransformerEncoder(cfg_.d_model, cfg_.layers, cfg_.heads, rng);
  classifier_ = Linear(cfg_.d_model, num_classes, rng);
}

Value SemanticContextModule::project(std::span<const std::size_t> subject_labels,
                                     std::span<const std::size_t> object_labels,
                                     const Value& predicate_prob,
                                     const EmbeddingTable& object_table,
                                     const EmbeddingTable& predicate_table) const {
  const Value w_subject = slice_rows(projection_, 0, kEmbeddingDim);
  const Value w_predicate = slice_rows(projection_, kEmbeddingDim, kEmbeddingDim);
  const Value w_object = slice_rows(projection_, 2 * kEmbeddingDim, kEmbeddingDim);
  const Value subj = gather_rows(matmul(object_table.rows, w_subject), subject_labels);
  const Value obj = gather_rows(matmul(object_table.rows, w_object), object_labels);
  const Value pred_proj = matmul(predicate_table.rows, w_predicate);
  Value pred;
  if (cfg_.argmax_predicate) {
    std::vector<std::size_t> idx(predicate_prob.rows());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto row = predicate_prob.data().subspan(r * predicate_prob.cols(), predicate_prob.cols());
      idx[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    pred = gather_rows(pred_proj, idx);
  } else {
    if (predicate_prob.cols() != predicate_table.vocab()) {
      throw DimensionError("scm: probability width does not match predicate table");
    }
    pred = matmul(predicate_prob, pred_proj);
  }
  return add(add(subj, pred), obj);
}

ContextOutput SemanticContextModule::encode(const Value& triplets, const Segments& scene_rows) const {
  return encode_context(triplets, scene_rows, encoder_, cfg_.variant);
}

void SemanticContextModule::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".projection", projection_});
  encoder_.collect(out, prefix + ".encoder");
  classifier_.collect(out, prefix + ".classifier");
}

}  // namespace sgg
