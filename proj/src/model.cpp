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

#include "sgg/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sgg/binary_io.hpp"
#include "sgg/crm.hpp"
#include "sgg/errors.hpp"

namespace sgg {

void ModelConfig::validate() const {
  if (num_object_classes < 2) throw ConfigError("model: num_object_classes must be >= 2");
  if (num_predicates < 2) throw ConfigError("model: num_predicates must be >= 2");
  if (visual_dim < 1) throw ConfigError("model: visual_dim must be >= 1");
  if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
  if (scm.enabled) scm.validate();
}

std::uint64_t ModelConfig::digest() const {
  std::ostringstream os;
  os << "objects=" << num_object_classes << ";predicates=" << num_predicates
     << ";visual=" << visual_dim << ";hidden=" << hidden << ";freq_bias=" << frequency_bias
     << ";scm=" << scm.enabled;
  if (scm.enabled) {
    os << ";variant=" << to_string(scm.variant) << ";d_model=" << scm.d_model
       << ";layers=" << scm.layers << ";heads=" << scm.heads << ";argmax=" << scm.argmax_predicate;
  }
  os << ";embedding_seed=" << embedding_seed << ";object_embeddings=" << object_embeddings
     << ";predicate_embeddings=" << predicate_embeddings;
  return fnv1a64(os.str());
}

std::vector<CandidatePair> all_pairs(const SceneInstance& scene) {
  const std::size_t n = scene.num_objects();
  std::vector<std::uint32_t> label(n * n, 0);
  for (const auto& r : scene.relations) label[r.subject * n + r.object] = r.predicate;
  std::vector<CandidatePair> out;
  out.reserve(n * (n - 1));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (i != j) out.push_back({i, j, label[i * n + j]});
  return out;
}

std::vector<CandidatePair> sample_train_pairs(const SceneInstance& scene,
                                              const NegativeSampling& ns, std::mt19937_64& rng) {
  std::vector<CandidatePair> out;
  std::vector<CandidatePair> negatives;
  for (const auto& p : all_pairs(scene)) (p.label != 0 ? out : negatives).push_back(p);
  const std::size_t want = negatives_for_scene(scene, ns);
  // Partial Fisher-Yates: the first `want` entries become the sample.
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, negatives.size() - 1);
    std::swap(negatives[i], negatives[pick(rng)]);
    out.push_back(negatives[i]);
  }
  return out;
}

std::vector<double> spatial_features(const Box& s, const Box& o) {
  const double scx = 0.5 * (s.x1 + s.x2), scy = 0.5 * (s.y1 + s.y2);
  const double ocx = 0.5 * (o.x1 + o.x2), ocy = 0.5 * (o.y1 + o.y2);
  const double ix = std::max(0.0, std::min(s.x2, o.x2) - std::max(s.x1, o.x1));
  const double iy = std::max(0.0, std::min(s.y2, o.y2) - std::max(s.y1, o.y1));
  const double inter = ix * iy;
  const double uni = s.width() * s.height() + o.width() * o.height() - inter;
  const double uw = std::max(s.x2, o.x2) - std::min(s.x1, o.x1);
  const double uh = std::max(s.y2, o.y2) - std::min(s.y1, o.y1);
  return {s.x1, s.y1, s.x2, s.y2,
          o.x1, o.y1, o.x2, o.y2,
          ocx - scx, ocy - scy,
          std::log(o.width() / s.width()), std::log(o.height() / s.height()),
          uni > 0.0 ? inter / uni : 0.0,
          uw, uh, uw * uh};
}

std::vector<double> pair_feature(const SceneInstance& scene, std::uint32_t subject,
                                 std::uint32_t object, const EmbeddingTable& object_table) {
  std::vector<double> f = spatial_features(scene.boxes.at(subject), scene.boxes.at(object));
  auto vs = scene.visual(subject);
  auto vo = scene.visual(object);
  f.insert(f.end(), vs.begin(), vs.end());
  f.insert(f.end(), vo.begin(), vo.end());
  auto es = object_table.row(scene.labels[subject]);
  auto eo = object_table.row(scene.labels[object]);
  f.insert(f.end(), es.begin(), es.end());
  f.insert(f.end(), eo.begin(), eo.end());
  return f;
}

Value total_loss(const Value& l_crw, const Value& l_sc, bool scm_enabled) {
  if (l_crw.size() != 1 || l_sc.size() != 1) throw DimensionError("total_loss: scalar terms");
  if (!scm_enabled) return l_crw;
  return add(l_crw, l_sc);
}

namespace {

EmbeddingTable make_table(const std::string& path, std::size_t vocab, std::uint64_t seed) {
  if (!path.empty()) return load_embedding_text(path, vocab);
  return random_embedding_table(vocab, seed);
}

}  // namespace

SggModel::SggModel(const ModelConfig& cfg, std::uint64_t init_seed, FrequencyBias bias)
    : cfg_(cfg), bias_(std::move(bias)) {
  cfg_.validate();
  if (cfg_.frequency_bias && bias_.num_classes() != cfg_.num_classes()) {
    throw DimensionError("model: frequency bias class count does not match config");
  }
  object_table_ = make_table(cfg_.object_embeddings, cfg_.num_object_classes + 1, cfg_.embedding_seed);
  predicate_table_ =
      make_table(cfg_.predicate_embeddings, cfg_.num_classes(), cfg_.embedding_seed + 1);
  std::mt19937_64 rng(init_seed);
  layer1_ = Linear(cfg_.pair_feature_dim(), cfg_.hidden, rng);
  layer2_ = Linear(cfg_.hidden, cfg_.hidden, rng);
  classifier_ = Linear(cfg_.hidden, cfg_.num_classes(), rng);
  layer1_.collect(params_, "context.layer1");
  layer2_.collect(params_, "context.layer2");
  classifier_.collect(params_, "classifier");
  if (cfg_.scm.enabled) {
    scm_.emplace(cfg_.scm, cfg_.num_classes(), rng);
    scm_->collect(params_, "scm");
  }
}

std::vector<Value> SggModel::parameter_values() const {
  std::vector<Value> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

std::size_t SggModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

BatchOutput SggModel::forward(std::span<const SceneInstance* const> scenes,
                              std::span<const std::vector<CandidatePair>> pairs,
                              const std::vector<double>* class_coef) const {
  if (scenes.size() != pairs.size() || scenes.empty()) {
    throw ContractError("forward: one pair list per scene required");
  }
  const std::size_t c = cfg_.num_classes();
  const std::size_t num_dim = ModelConfig::kSpatialDim + 2 * cfg_.visual_dim;
  BatchOutput out;
  out.offsets.push_back(0);
  for (const auto& p : pairs) {
    if (p.empty()) throw ContractError("forward: scene without candidate pairs");
    out.offsets.push_back(out.offsets.back() + p.size());
  }
  const std::size_t total = out.offsets.back();

  std::vector<double> numeric(total * num_dim);
  std::vector<double> bias_rows(total * c, 0.0);
  std::vector<std::size_t> subj_labels(total), obj_labels(total);
  std::vector<std::uint32_t> targets(total);
  Segments scene_rows(scenes.size());
  std::size_t row = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SceneInstance& scene = *scenes[s];
    if (scene.visual_dim != cfg_.visual_dim) {
      throw DimensionError("forward: scene visual dimension does not match model");
    }
    for (const auto& p : pairs[s]) {
      if (p.subject >= scene.num_objects() || p.object >= scene.num_objects() ||
          p.subject == p.object) {
        throw ContractError("forward: invalid candidate pair");
      }
      double* dst = numeric.data() + row * num_dim;
      const auto sp = spatial_features(scene.boxes[p.subject], scene.boxes[p.object]);
      std::copy(sp.begin(), sp.end(), dst);
      auto vs = scene.visual(p.subject);
      auto vo = scene.visual(p.object);
      std::copy(vs.begin(), vs.end(), dst + ModelConfig::kSpatialDim);
      std::copy(vo.begin(), vo.end(), dst + ModelConfig::kSpatialDim + cfg_.visual_dim);
      subj_labels[row] = scene.labels[p.subject];
      obj_labels[row] = scene.labels[p.object];
      targets[row] = p.label;
      if (cfg_.frequency_bias) {
        auto b = bias_.lookup(scene.labels[p.subject], scene.labels[p.object]);
        std::copy(b.begin(), b.end(), bias_rows.begin() + static_cast<std::ptrdiff_t>(row * c));
      }
      scene_rows[s].push_back(row);
      ++row;
    }
  }

  // layer1 on the concatenated feature, split by blocks so the frozen label
  // embeddings are projected once per call instead of once per pair.
  const Value w_numeric = slice_rows(layer1_.weight, 0, num_dim);
  const Value w_subject = slice_rows(layer1_.weight, num_dim, kEmbeddingDim);
  const Value w_object = slice_rows(layer1_.weight, num_dim + kEmbeddingDim, kEmbeddingDim);
  const Value x = Value::constant({total, num_dim}, std::move(numeric));
  Value h = matmul(x, w_numeric);
  h = add(h, gather_rows(matmul(object_table_.rows, w_subject), subj_labels));
  h = add(h, gather_rows(matmul(object_table_.rows, w_object), obj_labels));
  h = relu(add_row(h, layer1_.bias));
  h = relu(layer2_(h));
  Value z_prime = classifier_(h);
  if (cfg_.frequency_bias) z_prime = add(z_prime, Value::constant({total, c}, std::move(bias_rows)));
  out.base_logits = z_prime;

  std::optional<ContextOutput> predicted;
  if (scm_) {
    const Value prob = softmax(z_prime);
    const Value triplets =
        scm_->project(subj_labels, obj_labels, prob, object_table_, predicate_table_);
    predicted = scm_->encode(triplets, scene_rows);
    out.refined = scm_->refine(predicted->triplets);
    out.logits = fuse_logits(z_prime, out.refined);
  } else {
    out.logits = z_prime;
  }

  if (class_coef == nullptr) return out;
  if (class_coef->size() != c) throw DimensionError("forward: class coefficient length");

  std::vector<std::size_t> sc_rows;
  std::vector<double> row_scale(total);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const double inv = 1.0 / (static_cast<double>(pairs[s].size()) * static_cast<double>(scenes.size()));
    for (std::size_t r = out.offsets[s]; r < out.offsets[s + 1]; ++r) row_scale[r] = inv;
    const bool annotated = std::any_of(pairs[s].begin(), pairs[s].end(),
                                       [](const CandidatePair& p) { return p.label != 0; });
    if (annotated) sc_rows.push_back(s);
  }
  LossTerms loss;
  loss.crw = crw_loss_rows(out.logits, targets, *class_coef, row_scale);
  loss.sc = Value::scalar(0.0);
  if (scm_ && !sc_rows.empty()) {
    std::vector<double> onehot(total * c, 0.0);
    for (std::size_t r = 0; r < total; ++r) onehot[r * c + targets[r]] = 1.0;
    const Value gt_prob = Value::constant({total, c}, std::move(onehot));
    const Value gt_triplets =
        scm_->project(subj_labels, obj_labels, gt_prob, object_table_, predicate_table_);
    const ContextOutput truth = scm_->encode(gt_triplets, scene_rows);
    const std::size_t d = cfg_.scm.d_model;
    std::vector<double> coef(scenes.size() * d, 0.0);
    const double w = 1.0 / (static_cast<double>(d) * static_cast<double>(sc_rows.size()));
    for (std::size_t s : sc_rows) std::fill_n(coef.begin() + static_cast<std::ptrdiff_t>(s * d), d, w);
    const Value diff = sub(predicted->global, truth.global);
    loss.sc = weighted_sum(mul(diff, diff), coef);
    loss.sc_scenes = sc_rows.size();
  }
  loss.total = total_loss(loss.crw, loss.sc, scm_.has_value());
  out.loss = std::move(loss);
  return out;
}

ScenePrediction SggModel::predict(const SceneInstance& scene) const {
  if (scene.num_objects() < 2) throw DataError("predict: scene has fewer than 2 objects");
  ScenePrediction pred;
  pred.pairs = all_pairs(scene);
  pred.num_classes = cfg_.num_classes();
  NoGradGuard no_grad;
  const SceneInstance* sp = &scene;
  const BatchOutput out = forward(std::span(&sp, 1), std::span(&pred.pairs, 1), nullptr);
  pred.logits.assign(out.logits.data().begin(), out.logits.data().end());
  const Value probs = softmax(out.logits);
  pred.probs.assign(probs.data().begin(), probs.data().end());
  return pred;
}

void SggModel::load_parameters(
    const std::map<std::string, std::pair<Shape, std::vector<double>>>& arrays) {
  if (arrays.size() != params_.size()) {
    throw FormatError("checkpoint: holds " + std::to_string(arrays.size()) +
                      " arrays, model has " + std::to_string(params_.size()));
  }
  for (auto& p : params_) {
    auto it = arrays.find(p.name);
    if (it == arrays.end()) throw FormatError("checkpoint: missing array " + p.name);
    if (it->second.first != p.value.shape()) {
      throw FormatError("checkpoint: array " + p.name + " has shape " + it->second.first.str() +
                        ", expected " + p.value.shape().str());
    }
    std::copy(it->second.second.begin(), it->second.second.end(), p.value.mutable_data().begin());
  }
}

BatchOutput forward_scene(const SggModel& model, const SceneInstance& scene,
                          const std::vector<double>& class_coef, const NegativeSampling& ns,
                          std::mt19937_64& rng) {
  if (scene.num_objects() < 2) throw DataError("forward_scene: scene has fewer than 2 objects");
  std::vector<CandidatePair> pairs = sample_train_pairs(scene, ns, rng);
  const SceneInstance* sp = &scene;
  return model.forward(std::span(&sp, 1), std::span(&pairs, 1), &class_coef);
}

namespace {
constexpr std::uint8_t kCheckpointMagic[4] = {'S', 'G', 'H', 'T'};
}

std::vector<std::uint8_t> encode_checkpoint(const SggModel& model) {
  ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(kCheckpointVersion);
  w.put_u64(model.config().digest());
  w.put_u32(static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    w.put_u32(static_cast<std::uint32_t>(p.name.size()));
    w.put_string(p.name);
    w.put_u32(2);
    w.put_u64(p.value.rows());
    w.put_u64(p.value.cols());
    for (double v : p.value.data()) w.put_f64(v);
  }
  return w.bytes();
}

void save_checkpoint(const std::filesystem::path& path, const SggModel& model) {
  write_file_bytes(path, encode_checkpoint(model));
}

std::map<std::string, std::pair<Shape, std::vector<double>>> decode_checkpoint(
    std::span<const std::uint8_t> bytes, std::uint64_t expected_digest) {
  std::map<std::string, std::pair<Shape, std::vector<double>>> arrays;
  ByteReader r(bytes);
  try {
    auto magic = r.get_bytes(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kCheckpointMagic))) {
      throw FormatError("checkpoint: bad magic (expected SGHT)");
    }
    const std::uint32_t version = r.get_u32();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint64_t digest = r.get_u64();
    if (digest != expected_digest) {
      throw VersionError("checkpoint: config digest mismatch (checkpoint was trained with a "
                         "different model configuration)");
    }
    const std::uint32_t count = r.get_u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::string name = r.get_string(r.get_u32());
      const std::uint32_t rank = r.get_u32();
      if (rank < 1 || rank > 2) throw FormatError("checkpoint: array " + name + " has bad rank");
      Shape shape;
      shape.rows = rank == 2 ? static_cast<std::size_t>(r.get_u64()) : 1;
      shape.cols = static_cast<std::size_t>(r.get_u64());
      if (shape.size() > r.remaining() / 8) throw ByteReader::Underflow{};
      std::vector<double> data(shape.size());
      for (auto& v : data) v = r.get_f64();
      if (!arrays.emplace(name, std::make_pair(shape, std::move(data))).second) {
        throw FormatError("checkpoint: duplicate array " + name);
      }
    }
  } catch (const ByteReader::Underflow&) {
    throw CorruptionError("checkpoint: truncated");
  }
  if (r.remaining() != 0) throw CorruptionError("checkpoint: trailing bytes");
  return arrays;
}

void load_checkpoint(const std::filesystem::path& path, SggModel& model) {
  model.load_parameters(decode_checkpoint(read_file_bytes(path), model.config().digest()));
}

}  // namespace sgg
