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

#include "sgg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sgg/errors.hpp"

namespace sgg {

std::uint32_t negatives_for_scene(const SceneInstance& scene, const NegativeSampling& ns) {
  const std::size_t n = scene.num_objects();
  const std::size_t gt = scene.relations.size();
  const std::size_t available = n * (n - 1) - gt;
  const std::size_t room = ns.cap > gt ? ns.cap - gt : 0;
  return static_cast<std::uint32_t>(std::min({static_cast<std::size_t>(ns.ratio) * gt, room, available}));
}

ClassStats count_predicates(std::span<const SceneInstance> scenes, std::uint32_t num_predicates,
                            const NegativeSampling& ns) {
  if (scenes.empty()) throw DataError("count_predicates: empty dataset");
  ClassStats st;
  st.counts.assign(num_predicates + 1, 0);
  for (const auto& s : scenes) {
    for (const auto& r : s.relations) {
      if (r.predicate > num_predicates) throw DataError("count_predicates: predicate out of range");
      ++st.counts[r.predicate];
    }
    if (s.num_objects() >= 2) st.counts[0] += negatives_for_scene(s, ns);
  }
  st.total = std::accumulate(st.counts.begin(), st.counts.end(), std::int64_t{0});
  if (st.total == 0) throw DataError("count_predicates: dataset has no samples");
  return st;
}

ClassStats count_predicates(const Dataset& ds, std::span<const std::size_t> indices,
                            const NegativeSampling& ns) {
  std::vector<SceneInstance> subset;
  subset.reserve(indices.size());
  for (auto i : indices) subset.push_back(ds.scenes.at(i));
  return count_predicates(subset, ds.config.num_predicates, ns);
}

std::vector<double> class_balanced_weights(std::span<const std::int64_t> counts, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw ConfigError("class_balanced_weights: beta must be in [0, 1)");
  }
  std::vector<double> w(counts.size(), 1.0);
  double acc = 0.0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] <= 0) continue;
    // 1 - beta^n computed as -expm1(n log beta) to keep precision near beta -> 1.
    const double n = static_cast<double>(counts[i]);
    const double denom = beta == 0.0 ? 1.0 : -std::expm1(n * std::log(beta));
    w[i] = (1.0 - beta) / denom;
    acc += w[i];
    ++present;
  }
  if (present == 0) return w;
  const double mean = acc / static_cast<double>(present);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) w[i] /= mean;
  }
  return w;
}

HeadSet select_head_set(std::span<const std::int64_t> counts, double rho) {
  HeadSet head{0};
  if (counts.size() <= 1) return head;
  std::vector<std::uint32_t> order(counts.size() - 1);
  std::iota(order.begin(), order.end(), 1u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return counts[a] > counts[b]; });
  const double total = std::accumulate(counts.begin() + 1, counts.end(), 0.0);
  double cum = 0.0;
  for (std::uint32_t c : order) {
    if (cum >= rho * total) break;
    head.insert(c);
    cum += static_cast<double>(counts[c]);
  }
  return head;
}

FrequencyBias::FrequencyBias(
    std::uint32_t num_classes,
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> table)
    : num_classes_(num_classes),
      table_(std::move(table)),
      uniform_(num_classes, std::log(1.0 / static_cast<double>(num_classes))) {}

std::span<const double> FrequencyBias::lookup(std::uint32_t subject_label,
                                              std::uint32_t object_label) const {
  auto it = table_.find({subject_label, object_label});
  if (it == table_.end()) return uniform_;
  return it->second;
}

FrequencyBias build_frequency_bias(std::span<const SceneInstance> scenes,
                                   std::uint32_t num_predicates, double smoothing) {
  if (!(smoothing > 0.0)) throw ConfigError("build_frequency_bias: smoothing must be > 0");
  const std::uint32_t c = num_predicates + 1;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> counts;
  for (const auto& s : scenes) {
    const std::size_t n = s.num_objects();
    std::vector<std::uint32_t> pred(n * n, 0);
    for (const auto& r : s.relations) pred[r.subject * n + r.object] = r.predicate;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        auto& v = counts[{s.labels[i], s.labels[j]}];
        if (v.empty()) v.assign(c, 0.0);
        v[pred[i * n + j]] += 1.0;
      }
    }
  }
  for (auto& [key, v] : counts) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    const double denom = total + smoothing * static_cast<double>(c);
    for (auto& x : v) x = std::log((x + smoothing) / denom);
  }
  return FrequencyBias(c, std::move(counts));
}

FrequencyBias build_frequency_bias(const Dataset& ds, std::span<const std::size_t> indices,
                                   double smoothing) {
  std::vector<SceneInstance> subset;
  subset.reserve(indices.size());
  for (auto i : indices) subset.push_back(ds.scenes.at(i));
  return build_frequency_bias(subset, ds.config.num_predicates, smoothing);
}

EmbeddingTable random_embedding_table(std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<double> data(vocab * kEmbeddingDim);
  for (auto& x : data) x = u(rng);
  return {Value::constant({vocab, kEmbeddingDim}, std::move(data))};
}

EmbeddingTable load_embedding_text(const std::filesystem::path& path, std::size_t vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::vector<double> data;
  data.reserve(vocab * kEmbeddingDim);
  std::string line;
  std::size_t rows = 0, lineno = 0;
  while (rows < vocab && std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof() || vals.size() != kEmbeddingDim) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected token and " +
                        std::to_string(kEmbeddingDim) + " reals");
    }
    data.insert(data.end(), vals.begin(), vals.end());
    ++rows;
  }
  if (rows < vocab) {
    throw FormatError(path.string() + ": needs " + std::to_string(vocab) + " rows, found " +
                      std::to_string(rows));
  }
  return {Value::constant({vocab, kEmbeddingDim}, std::move(data))};
}

namespace {

void check_distribution_rows(const Value& prob, std::size_t vocab) {
  if (prob.cols() != vocab) {
    throw DimensionError("embed: probability width " + std::to_string(prob.cols()) +
                         " does not match vocabulary " + std::to_string(vocab));
  }
  for (std::size_t r = 0; r < prob.rows(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) {
      const double p = prob.at(r, j);
      if (p < 0.0) throw ContractError("embed: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) throw ContractError("embed: probabilities do not sum to 1");
  }
}

}  // namespace

Value embed_soft(const Value& prob, const EmbeddingTable& table) {
  check_distribution_rows(prob, table.vocab());
  return matmul(prob, table.rows);
}

Value embed_argmax(const Value& prob, const EmbeddingTable& table) {
  check_distribution_rows(prob, table.vocab());
  std::vector<std::size_t> idx(prob.rows());
  for (std::size_t r = 0; r < prob.rows(); ++r) {
    auto row = prob.data().subspan(r * prob.cols(), prob.cols());
    idx[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return gather_rows(table.rows, idx);
}

}  // namespace sgg
