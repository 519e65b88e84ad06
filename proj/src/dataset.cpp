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

#include "sgg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "json.hpp"

#include "sgg/binary_io.hpp"
#include "sgg/errors.hpp"

namespace sgg {

void GenConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("gen config: " + m); };
  if (num_scenes < 1) fail("num_scenes must be >= 1");
  if (min_objects < 2) fail("min_objects must be >= 2");
  if (min_objects > max_objects) fail("min_objects > max_objects");
  if (num_object_classes < 2) fail("num_object_classes must be >= 2");
  if (num_predicates < 2) fail("num_predicates must be >= 2");
  if (!(zipf_s > 0.0)) fail("zipf_s must be > 0");
  if (min_relations < 1) fail("min_relations must be >= 1");
  if (min_relations > max_relations) fail("min_relations > max_relations");
  if (min_relations > min_objects - 1) fail("min_relations exceeds min_objects - 1");
  if (visual_dim < 1) fail("visual_dim must be >= 1");
  if (!(noise >= 0.0)) fail("noise must be >= 0");
  if (num_contexts < 1) fail("num_contexts must be >= 1");
  if (!(tail_offset >= 0.0)) fail("tail_offset must be >= 0");
  if (!(context_label_prob >= 0.0 && context_label_prob <= 1.0)) {
    fail("context_label_prob must be in [0, 1]");
  }
}

PredicateTaxonomy make_taxonomy(const GenConfig& cfg) {
  PredicateTaxonomy t;
  const std::uint32_t r = cfg.num_predicates;
  t.num_bases = std::clamp<std::uint32_t>(r / 5, 1, r);
  t.parent.assign(r + 1, 0);
  t.context.assign(r + 1, 0);
  for (std::uint32_t c = 1; c <= r; ++c) {
    if (c <= t.num_bases) {
      t.parent[c] = c;
      continue;
    }
    const std::uint32_t j = c - t.num_bases - 1;
    t.parent[c] = j % t.num_bases + 1;
    t.context[c] = (j / t.num_bases) % cfg.num_contexts;
  }
  return t;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = n01(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Fixed latent structure derived from the seed before any scene is drawn.
struct World {
  PredicateTaxonomy taxonomy;
  std::vector<std::vector<double>> prototype;   // [R+1][D_v]
  std::vector<std::vector<double>> appearance;  // [O+1][D_v]
  std::vector<double> angle;                    // [R+1]
  std::vector<double> distance;                 // [R+1]
  std::vector<double> context_weight;           // [K]
  std::vector<std::discrete_distribution<std::uint32_t>> predicate_given_context;
  std::vector<std::vector<std::uint32_t>> label_pool;  // [K]
};

World build_world(const GenConfig& cfg, std::mt19937_64& rng) {
  World w;
  w.taxonomy = make_taxonomy(cfg);
  const std::uint32_t r = cfg.num_predicates;
  const std::uint32_t g = w.taxonomy.num_bases;
  const std::uint32_t k = cfg.num_contexts;
  w.prototype.assign(r + 1, {});
  w.angle.assign(r + 1, 0.0);
  w.distance.assign(r + 1, 1.0);
  std::uniform_real_distribution<double> dist_mul(0.8, 1.2);
  for (std::uint32_t c = 1; c <= g; ++c) {
    w.prototype[c] = random_unit(rng, cfg.visual_dim);
    w.angle[c] = 2.0 * std::numbers::pi * (c - 1) / g - std::numbers::pi / 2.0;
  }
  for (std::uint32_t c = g + 1; c <= r; ++c) {
    const auto& base = w.prototype[w.taxonomy.parent[c]];
    auto off = random_unit(rng, cfg.visual_dim);
    w.prototype[c].resize(cfg.visual_dim);
    for (std::size_t d = 0; d < cfg.visual_dim; ++d) {
      w.prototype[c][d] = base[d] + cfg.tail_offset * off[d];
    }
    w.angle[c] = w.angle[w.taxonomy.parent[c]];
    w.distance[c] = dist_mul(rng);
  }
  w.appearance.assign(cfg.num_object_classes + 1, {});
  for (std::uint32_t l = 1; l <= cfg.num_object_classes; ++l) {
    w.appearance[l] = random_unit(rng, cfg.visual_dim);
    for (auto& x : w.appearance[l]) x *= 0.5;
  }
  // P(c | context) is proportional to zipf(c) for bases and K * zipf(c) for
  // the context's own tails; drawing the context with probability
  // proportional to its normalizer makes the marginal exactly Zipf.
  std::vector<double> zipf(r + 1, 0.0);
  for (std::uint32_t c = 1; c <= r; ++c) zipf[c] = std::pow(static_cast<double>(c), -cfg.zipf_s);
  w.context_weight.assign(k, 0.0);
  for (std::uint32_t ctx = 0; ctx < k; ++ctx) {
    std::vector<double> p(r + 1, 0.0);
    for (std::uint32_t c = 1; c <= r; ++c) {
      if (c <= g) {
        p[c] = zipf[c];
      } else if (w.taxonomy.context[c] == ctx) {
        p[c] = static_cast<double>(k) * zipf[c];
      }
    }
    w.context_weight[ctx] = std::accumulate(p.begin(), p.end(), 0.0);
    w.predicate_given_context.emplace_back(p.begin(), p.end());
  }
  w.label_pool.assign(k, {});
  for (std::uint32_t l = 1; l <= cfg.num_object_classes; ++l) {
    w.label_pool[(l - 1) % k].push_back(l);
  }
  return w;
}

SceneInstance generate_scene(const GenConfig& cfg, const World& w, std::mt19937_64& rng) {
  std::discrete_distribution<std::uint32_t> pick_context(w.context_weight.begin(),
                                                         w.context_weight.end());
  const std::uint32_t ctx = pick_context(rng);
  const std::uint32_t n =
      std::uniform_int_distribution<std::uint32_t>(cfg.min_objects, cfg.max_objects)(rng);
  const std::uint32_t max_rel = std::min(cfg.max_relations, n - 1);
  const std::uint32_t nrel =
      std::uniform_int_distribution<std::uint32_t>(cfg.min_relations, max_rel)(rng);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> size_dist(0.08, 0.3);
  std::normal_distribution<double> angle_noise(0.0, 0.25);
  std::normal_distribution<double> n01(0.0, 1.0);

  // Generation order: object i may be the subject of a relation to some j < i,
  // so each box is placed exactly once.
  std::vector<std::uint32_t> labels(n);
  const auto& pool = w.label_pool[ctx];
  for (auto& l : labels) {
    if (!pool.empty() && u01(rng) < cfg.context_label_prob) {
      l = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    } else {
      l = std::uniform_int_distribution<std::uint32_t>(1, cfg.num_object_classes)(rng);
    }
  }
  std::vector<std::uint32_t> candidates(n - 1);
  std::iota(candidates.begin(), candidates.end(), 1u);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<char> is_subject(n, 0);
  for (std::uint32_t i = 0; i < nrel; ++i) is_subject[candidates[i]] = 1;

  std::vector<Box> boxes(n);
  std::vector<Relation> rels;
  std::vector<std::uint32_t> subject_pred(n, 0);
  auto place = [](double cx, double cy, double bw, double bh) {
    cx = std::clamp(cx, bw / 2.0, 1.0 - bw / 2.0);
    cy = std::clamp(cy, bh / 2.0, 1.0 - bh / 2.0);
    return Box{cx - bw / 2.0, cy - bh / 2.0, cx + bw / 2.0, cy + bh / 2.0};
  };
  auto predicate_dist = w.predicate_given_context[ctx];
  for (std::uint32_t i = 0; i < n; ++i) {
    const double bw = size_dist(rng);
    const double bh = size_dist(rng);
    if (!is_subject[i]) {
      boxes[i] = place(u01(rng), u01(rng), bw, bh);
      continue;
    }
    const std::uint32_t obj = std::uniform_int_distribution<std::uint32_t>(0, i - 1)(rng);
    const std::uint32_t pred = predicate_dist(rng);
    const Box& ob = boxes[obj];
    const double ocx = 0.5 * (ob.x1 + ob.x2), ocy = 0.5 * (ob.y1 + ob.y2);
    const double theta = w.angle[pred] + angle_noise(rng);
    const double reach = 0.5 * w.distance[pred] *
                         (std::hypot(bw, bh) + std::hypot(ob.width(), ob.height())) * 0.6;
    boxes[i] = place(ocx + reach * std::cos(theta), ocy + reach * std::sin(theta), bw, bh);
    rels.push_back({i, obj, pred});
    subject_pred[i] = pred;
  }

  std::vector<double> visuals(static_cast<std::size_t>(n) * cfg.visual_dim);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& app = w.appearance[labels[i]];
    for (std::size_t d = 0; d < cfg.visual_dim; ++d) {
      double x = app[d] + cfg.noise * n01(rng);
      if (subject_pred[i] != 0) x += w.prototype[subject_pred[i]][d];
      visuals[i * cfg.visual_dim + d] = x;
    }
  }

  // Shuffle object order so indices carry no generation-order signal.
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint32_t> new_index(n);
  for (std::uint32_t i = 0; i < n; ++i) new_index[perm[i]] = i;

  SceneInstance s;
  s.visual_dim = cfg.visual_dim;
  s.boxes.resize(n);
  s.labels.resize(n);
  s.visuals.resize(visuals.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t src = perm[i];
    s.boxes[i] = boxes[src];
    s.labels[i] = labels[src];
    std::copy_n(visuals.begin() + static_cast<std::ptrdiff_t>(src * cfg.visual_dim),
                cfg.visual_dim, s.visuals.begin() + static_cast<std::ptrdiff_t>(i * cfg.visual_dim));
  }
  for (auto& r : rels) s.relations.push_back({new_index[r.subject], new_index[r.object], r.predicate});
  std::sort(s.relations.begin(), s.relations.end());
  return s;
}

bool tail_classes_covered(const Dataset& ds) {
  const std::uint32_t r = ds.config.num_predicates;
  if (r > 25 || ds.scenes.size() < kTailCoverageMinScenes) return true;
  std::vector<std::size_t> total(r + 1, 0), in_test(r + 1, 0);
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const bool test = is_test_scene(ds.config.seed, i);
    for (const auto& rel : ds.scenes[i].relations) {
      ++total[rel.predicate];
      if (test) ++in_test[rel.predicate];
    }
  }
  std::vector<std::uint32_t> order(r);
  std::iota(order.begin(), order.end(), 1u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return total[a] < total[b]; });
  for (std::uint32_t i = 0; i < r / 2; ++i) {
    if (in_test[order[i]] == 0) return false;
  }
  return true;
}

}  // namespace

Dataset generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const World world = build_world(cfg, rng);
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Dataset ds;
    ds.config = cfg;
    ds.scenes.reserve(cfg.num_scenes);
    for (std::uint32_t i = 0; i < cfg.num_scenes; ++i) ds.scenes.push_back(generate_scene(cfg, world, rng));
    if (tail_classes_covered(ds)) return ds;
  }
  throw DataError("generate_dataset: could not cover every tail class in the test split; "
                  "increase num_scenes");
}

bool is_test_scene(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed * 0x100000001B3ULL ^ splitmix64(index)) % 5 == 0;
}

Split split_dataset(const Dataset& ds) {
  Split s;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    (is_test_scene(ds.config.seed, i) ? s.test : s.train).push_back(i);
  }
  return s;
}

void validate_scene(const SceneInstance& scene, const GenConfig& cfg) {
  const std::size_t n = scene.num_objects();
  if (scene.labels.size() != n || scene.visuals.size() != n * scene.visual_dim) {
    throw DataError("scene: per-object arrays disagree in length");
  }
  for (const auto& b : scene.boxes) {
    if (!(b.x1 < b.x2 && b.y1 < b.y2)) throw DataError("scene: degenerate box");
    if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > 1.0 || b.y2 > 1.0) {
      throw DataError("scene: box outside the unit square");
    }
  }
  for (auto l : scene.labels) {
    if (l < 1 || l > cfg.num_object_classes) throw DataError("scene: object label out of range");
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& r : scene.relations) {
    if (r.subject >= n || r.object >= n) throw DataError("scene: relation index out of range");
    if (r.subject == r.object) throw DataError("scene: relation subject equals object");
    if (r.predicate < 1 || r.predicate > cfg.num_predicates) {
      throw DataError("scene: predicate out of range");
    }
    if (!pairs.emplace(r.subject, r.object).second) throw DataError("scene: duplicate pair");
  }
}

namespace {

constexpr std::uint8_t kDatasetMagic[4] = {'S', 'G', 'D', 'S'};

void put_config(ByteWriter& w, const GenConfig& c) {
  w.put_u32(c.num_scenes);
  w.put_u32(c.min_objects);
  w.put_u32(c.max_objects);
  w.put_u32(c.num_object_classes);
  w.put_u32(c.num_predicates);
  w.put_f64(c.zipf_s);
  w.put_u32(c.min_relations);
  w.put_u32(c.max_relations);
  w.put_u32(c.visual_dim);
  w.put_f64(c.noise);
  w.put_u32(c.num_contexts);
  w.put_f64(c.tail_offset);
  w.put_f64(c.context_label_prob);
  w.put_u64(c.seed);
}

GenConfig get_config(ByteReader& r) {
  GenConfig c;
  c.num_scenes = r.get_u32();
  c.min_objects = r.get_u32();
  c.max_objects = r.get_u32();
  c.num_object_classes = r.get_u32();
  c.num_predicates = r.get_u32();
  c.zipf_s = r.get_f64();
  c.min_relations = r.get_u32();
  c.max_relations = r.get_u32();
  c.visual_dim = r.get_u32();
  c.noise = r.get_f64();
  c.num_contexts = r.get_u32();
  c.tail_offset = r.get_f64();
  c.context_label_prob = r.get_f64();
  c.seed = r.get_u64();
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.put_bytes(kDatasetMagic);
  w.put_u32(kDatasetVersion);
  put_config(w, ds.config);
  w.put_u64(ds.scenes.size());
  w.put_u64(fnv1a64(w.bytes()));
  for (const auto& s : ds.scenes) {
    ByteWriter rec;
    rec.put_u32(static_cast<std::uint32_t>(s.num_objects()));
    rec.put_u32(static_cast<std::uint32_t>(s.visual_dim));
    for (std::size_t i = 0; i < s.num_objects(); ++i) {
      rec.put_f64(s.boxes[i].x1);
      rec.put_f64(s.boxes[i].y1);
      rec.put_f64(s.boxes[i].x2);
      rec.put_f64(s.boxes[i].y2);
      rec.put_u32(s.labels[i]);
      for (double v : s.visual(i)) rec.put_f64(v);
    }
    rec.put_u32(static_cast<std::uint32_t>(s.relations.size()));
    for (const auto& r : s.relations) {
      rec.put_u32(r.subject);
      rec.put_u32(r.object);
      rec.put_u32(r.predicate);
    }
    w.put_u64(rec.size());
    w.put_bytes(rec.bytes());
    w.put_u64(fnv1a64(rec.bytes()));
  }
  return w.bytes();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Dataset ds;
  std::uint64_t count = 0;
  try {
    auto magic = r.get_bytes(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kDatasetMagic))) {
      throw FormatError("dataset: bad magic (expected SGDS)");
    }
    const std::uint32_t version = r.get_u32();
    if (version != kDatasetVersion) {
      throw VersionError("dataset: unsupported version " + std::to_string(version));
    }
    ds.config = get_config(r);
    count = r.get_u64();
    const std::size_t header_end = r.position();
    const std::uint64_t checksum = r.get_u64();
    if (checksum != fnv1a64(bytes.first(header_end))) {
      throw CorruptionError("dataset: header checksum mismatch");
    }
  } catch (const ByteReader::Underflow&) {
    throw CorruptionError("dataset: truncated header");
  }
  ds.scenes.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t si = 0; si < count; ++si) {
    const std::string where = "dataset: scene " + std::to_string(si);
    try {
      const std::uint64_t len = r.get_u64();
      auto payload = r.get_bytes(static_cast<std::size_t>(len));
      const std::uint64_t checksum = r.get_u64();
      if (checksum != fnv1a64(payload)) throw CorruptionError(where + ": checksum mismatch");
      ByteReader pr(payload);
      SceneInstance s;
      const std::uint32_t n = pr.get_u32();
      s.visual_dim = pr.get_u32();
      s.boxes.resize(n);
      s.labels.resize(n);
      s.visuals.resize(static_cast<std::size_t>(n) * s.visual_dim);
      for (std::uint32_t i = 0; i < n; ++i) {
        s.boxes[i] = {pr.get_f64(), pr.get_f64(), pr.get_f64(), pr.get_f64()};
        s.labels[i] = pr.get_u32();
        for (std::size_t d = 0; d < s.visual_dim; ++d) s.visuals[i * s.visual_dim + d] = pr.get_f64();
      }
      const std::uint32_t nrel = pr.get_u32();
      for (std::uint32_t i = 0; i < nrel; ++i) {
        Relation rel;
        rel.subject = pr.get_u32();
        rel.object = pr.get_u32();
        rel.predicate = pr.get_u32();
        s.relations.push_back(rel);
      }
      if (pr.remaining() != 0) throw CorruptionError(where + ": trailing bytes in record");
      validate_scene(s, ds.config);
      ds.scenes.push_back(std::move(s));
    } catch (const ByteReader::Underflow&) {
      throw CorruptionError(where + ": truncated record");
    } catch (const CorruptionError&) {
      throw;
    } catch (const DataError& e) {
      throw CorruptionError(where + ": " + e.what());
    }
  }
  if (r.remaining() != 0) throw CorruptionError("dataset: trailing bytes after last scene");
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_file_bytes(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file_bytes(path));
}

void export_jsonl(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const auto& s = ds.scenes[i];
    nlohmann::json j;
    j["scene"] = i;
    j["split"] = is_test_scene(ds.config.seed, i) ? "test" : "train";
    j["labels"] = s.labels;
    auto& boxes = j["boxes"] = nlohmann::json::array();
    for (const auto& b : s.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    auto& rels = j["relations"] = nlohmann::json::array();
    for (const auto& r : s.relations) rels.push_back({r.subject, r.object, r.predicate});
    out << j.dump() << '\n';
  }
}

}  // namespace sgg
