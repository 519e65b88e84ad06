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

// Curriculum re-weighting: head-class decay schedules and the re-weighted
// cross-entropy built on them.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgg/stats.hpp"
#include "sgg/tensor.hpp"

namespace sgg {

enum class ScheduleKind { kLinear, kExponential, kCosine };

ScheduleKind parse_schedule_kind(const std::string& s);
std::string to_string(ScheduleKind k);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kLinear;
  double nu = 0.1;     // exponential base, (0, 1)
  double alpha = 0.25; // lower bound on head-class factors
  std::uint64_t total_iters = 3000;

  void validate() const;
};

// Decreasing from phi(0) = 1:
//   linear       1 - l/L
//   exponential  nu^(l/L)
//   cosine       cos(pi/2 * l/L)
double phi(const ScheduleSpec& spec, std::uint64_t iter);

// max(phi(l), alpha) for classes in the head set, 1 elsewhere.
std::vector<double> lambda_factor(const ScheduleSpec& spec, std::uint64_t iter,
                                  const HeadSet& head_set, std::size_t num_classes);

// z is a [1 x C] logit row, y a one-hot vector of length C.
Value ce_loss(const Value& z, std::span<const double> y);
// -sum_i lambda_i w_i y_i log softmax(z)_i
Value crw_loss(const Value& z, std::span<const double> y, std::span<const double> weights,
               std::span<const double> lambda);

// Sum over rows r of coef[label_r] * -log softmax(z_r)[label_r], for logits
// [P x C]. Equals summing crw_loss over the rows with coef = lambda * w.
// A non-empty row_scale multiplies each row's term.
Value crw_loss_rows(const Value& z, std::span<const std::uint32_t> labels,
                    std::span<const double> class_coef, std::span<const double> row_scale = {});

}  // namespace sgg
