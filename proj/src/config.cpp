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

#include "sgg/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "sgg/errors.hpp"

namespace sgg {

namespace {

using FieldRef = std::variant<std::uint32_t*, std::uint64_t*, double*, bool*,
                              std::string*, ScheduleKind*, ScmVariant*>;

struct Field {
  std::string key;
  FieldRef ref;
};

std::vector<Field> fields(RunConfig& c) {
  return {
      {"run.seed", &c.seed},
      {"run.out", &c.out},
      {"run.dataset", &c.dataset},
      {"data.num_scenes", &c.data.num_scenes},
      {"data.min_objects", &c.data.min_objects},
      {"data.max_objects", &c.data.max_objects},
      {"data.num_object_classes", &c.data.num_object_classes},
      {"data.num_predicates", &c.data.num_predicates},
      {"data.zipf_s", &c.data.zipf_s},
      {"data.min_relations", &c.data.min_relations},
      {"data.max_relations", &c.data.max_relations},
      {"data.visual_dim", &c.data.visual_dim},
      {"data.noise", &c.data.noise},
      {"data.num_contexts", &c.data.num_contexts},
      {"data.tail_offset", &c.data.tail_offset},
      {"data.context_label_prob", &c.data.context_label_prob},
      {"data.seed", &c.data.seed},
      {"model.hidden", &c.model.hidden},
      {"model.frequency_bias", &c.model.frequency_bias},
      {"model.bias_smoothing", &c.bias_smoothing},
      {"model.embedding_seed", &c.model.embedding_seed},
      {"model.object_embeddings", &c.model.object_embeddings},
      {"model.predicate_embeddings", &c.model.predicate_embeddings},
      {"model.neg_ratio", &c.sampling.ratio},
      {"model.max_pairs", &c.sampling.cap},
      {"crm.enabled", &c.crm.enabled},
      {"crm.schedule", &c.crm.schedule},
      {"crm.alpha", &c.crm.alpha},
      {"crm.nu", &c.crm.nu},
      {"crm.rho", &c.crm.rho},
      {"crm.class_balanced", &c.crm.class_balanced},
      {"crm.beta", &c.crm.beta},
      {"scm.enabled", &c.model.scm.enabled},
      {"scm.variant", &c.model.scm.variant},
      {"scm.d_model", &c.model.scm.d_model},
      {"scm.layers", &c.model.scm.layers},
      {"scm.heads", &c.model.scm.heads},
      {"scm.argmax_predicate", &c.model.scm.argmax_predicate},
      {"optim.lr", &c.sgd.lr},
      {"optim.momentum", &c.sgd.momentum},
      {"optim.clip_norm", &c.sgd.clip_norm},
      {"optim.batch_size", &c.batch_size},
      {"optim.total_iters", &c.total_iters},
      {"train.eval_interval", &c.eval_interval},
      {"train.log_interval", &c.log_interval},
      {"train.graph_constraint", &c.graph_constraint},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

void assign(const Field& f, std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  std::visit(
      [&](auto* ptr) {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, double>) {
          try {
            std::size_t used = 0;
            *ptr = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
          } catch (const std::exception&) {
            throw ConfigError(f.key + ": expected a real number, got '" + v + "'");
          }
        } else if constexpr (std::is_same_v<T, bool>) {
          if (v == "true" || v == "1") {
            *ptr = true;
          } else if (v == "false" || v == "0") {
            *ptr = false;
          } else {
            throw ConfigError(f.key + ": expected true/false, got '" + v + "'");
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          *ptr = v;
        } else if constexpr (std::is_same_v<T, ScheduleKind>) {
          *ptr = parse_schedule_kind(v);
        } else if constexpr (std::is_same_v<T, ScmVariant>) {
          *ptr = parse_scm_variant(v);
        } else {
          *ptr = parse_unsigned<T>(f.key, v);
        }
      },
      f.ref);
}

std::string render(const FieldRef& ref) {
  return std::visit(
      [](auto* ptr) -> std::string {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", *ptr);
          return buf;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *ptr ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return "\"" + *ptr + "\"";
        } else if constexpr (std::is_same_v<T, ScheduleKind> || std::is_same_v<T, ScmVariant>) {
          return "\"" + to_string(*ptr) + "\"";
        } else {
          return std::to_string(*ptr);
        }
      },
      ref);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields(cfg)) {
    if (f.key == key) {
      assign(f, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.empty()) {
    data.validate();
  } else if (!std::filesystem::exists(dataset)) {
    throw ConfigError("dataset file does not exist: " + dataset);
  }
  if (batch_size < 1) throw ConfigError("optim.batch_size must be >= 1");
  if (total_iters < 1) throw ConfigError("optim.total_iters must be >= 1");
  if (!(sgd.lr > 0.0)) throw ConfigError("optim.lr must be > 0");
  if (sgd.momentum < 0.0 || sgd.momentum >= 1.0) throw ConfigError("optim.momentum must be in [0, 1)");
  if (!(crm.beta >= 0.0 && crm.beta < 1.0)) throw ConfigError("crm.beta must be in [0, 1)");
  if (!(crm.rho >= 0.0 && crm.rho <= 1.0)) throw ConfigError("crm.rho must be in [0, 1]");
  if (!(bias_smoothing > 0.0)) throw ConfigError("model.bias_smoothing must be > 0");
  if (sampling.cap < 1) throw ConfigError("model.max_pairs must be >= 1");
  schedule().validate();
  for (const auto* path : {&model.object_embeddings, &model.predicate_embeddings}) {
    if (!path->empty() && !std::filesystem::exists(*path)) {
      throw ConfigError("embedding file does not exist: " + *path);
    }
  }
  if (model.scm.enabled) model.scm.validate();
}

ScheduleSpec RunConfig::schedule() const {
  ScheduleSpec s;
  s.kind = crm.schedule;
  s.alpha = crm.alpha;
  s.nu = crm.nu;
  s.total_iters = total_iters;
  return s;
}

ModelConfig RunConfig::model_config(const GenConfig& data_cfg) const {
  ModelConfig m = model;
  m.num_object_classes = data_cfg.num_object_classes;
  m.num_predicates = data_cfg.num_predicates;
  m.visual_dim = data_cfg.visual_dim;
  return m;
}

std::string RunConfig::to_toml() const {
  RunConfig copy = *this;
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields(copy)) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << f.key.substr(dot + 1) << " = " << render(f.ref) << '\n';
  }
  return os.str();
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section = "run";
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_key(cfg, key.find('.') == std::string::npos ? section + "." + key : key,
              trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::string> config_keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const auto& f : fields(c)) out.push_back(f.key);
  return out;
}

}  // namespace sgg
