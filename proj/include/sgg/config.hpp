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

// Run configuration: `[section]` headers and `key = value` lines. Every key
// is addressable as `section.key` on the command line via --override.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgg/crm.hpp"
#include "sgg/dataset.hpp"
#include "sgg/model.hpp"
#include "sgg/optim.hpp"
#include "sgg/stats.hpp"

namespace sgg {

struct CrmSettings {
  bool enabled = true;
  ScheduleKind schedule = ScheduleKind::kLinear;
  double alpha = 0.25;
  double nu = 0.1;
  double rho = 0.7;
  bool class_balanced = true;
  double beta = 0.99;
};

struct RunConfig {
  GenConfig data;
  // When set, the dataset is loaded from this SGDS file instead of generated.
  std::string dataset;
  ModelConfig model;
  CrmSettings crm;
  SgdConfig sgd;
  std::uint32_t batch_size = 12;
  std::uint64_t total_iters = 3000;
  NegativeSampling sampling;
  double bias_smoothing = 1e-3;
  std::uint64_t eval_interval = 500;
  std::uint64_t log_interval = 50;
  bool graph_constraint = true;
  std::uint64_t seed = 1;
  std::string out = "runs/default";

  void validate() const;
  ScheduleSpec schedule() const;
  // Model config with the class counts taken from the data section.
  ModelConfig model_config(const GenConfig& data_cfg) const;
  // Fully resolved config in the same format the parser reads.
  std::string to_toml() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
// `section.key=value`; throws ConfigError on unknown keys or bad values.
void apply_override(RunConfig& cfg, const std::string& assignment);
std::vector<std::string> config_keys();

}  // namespace sgg
