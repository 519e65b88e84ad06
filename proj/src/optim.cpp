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

#include "sgg/optim.hpp"

#include <cmath>

#include "sgg/errors.hpp"

namespace sgg {

double global_grad_norm(std::span<const Value> params) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.grad()) sq += g * g;
  return std::sqrt(sq);
}

void sgd_step(std::span<Value> params, OptState& opt, const SgdConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("sgd_step: learning rate must be > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw ConfigError("sgd_step: momentum must be in [0, 1)");
  }
  if (opt.velocity.empty()) {
    opt.velocity.reserve(params.size());
    for (const auto& p : params) opt.velocity.emplace_back(p.size(), 0.0);
  }
  if (opt.velocity.size() != params.size()) {
    throw ContractError("sgd_step: optimizer state built for a different parameter list");
  }
  double factor = 1.0;
  if (cfg.clip_norm > 0.0) {
    const double norm = global_grad_norm(params);
    if (norm > cfg.clip_norm) factor = cfg.clip_norm / norm;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& vel = opt.velocity[i];
    if (vel.size() != params[i].size()) {
      throw ContractError("sgd_step: velocity shape does not match parameter");
    }
    auto data = params[i].mutable_data();
    auto grad = params[i].mutable_grad();
    for (std::size_t j = 0; j < vel.size(); ++j) {
      vel[j] = cfg.momentum * vel[j] + factor * grad[j];
      data[j] -= cfg.lr * vel[j];
      grad[j] = 0.0;
    }
  }
  ++opt.step_count;
}

}  // namespace sgg
