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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgg/tensor.hpp"

namespace sgg {

struct SgdConfig {
  double lr = 1.2e-2;
  double momentum = 0.9;
  // Global gradient-norm threshold; <= 0 disables clipping.
  double clip_norm = 5.0;
};

struct OptState {
  std::vector<std::vector<double>> velocity;
  std::uint64_t step_count = 0;
};

// L2 norm of all parameter gradients taken together.
double global_grad_norm(std::span<const Value> params);

// Clip, v <- momentum * v + g, p <- p - lr * v, then zero the gradients.
// Velocity buffers are allocated on the first call.
void sgd_step(std::span<Value> params, OptState& opt, const SgdConfig& cfg);

}  // namespace sgg
