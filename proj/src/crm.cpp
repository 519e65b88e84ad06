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

#include "sgg/crm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sgg/errors.hpp"

namespace sgg {

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "exponential" || s == "exp") return ScheduleKind::kExponential;
  if (s == "cosine" || s == "cos") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind '" + s + "' (linear, exponential, cosine)");
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kLinear:
      return "linear";
    case ScheduleKind::kExponential:
      return "exponential";
    case ScheduleKind::kCosine:
      return "cosine";
  }
  return "linear";
}

void ScheduleSpec::validate() const {
  if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("schedule: nu must be in (0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("schedule: alpha must be in [0, 1]");
  if (total_iters < 1) throw ConfigError("schedule: total_iters must be >= 1");
}

double phi(const ScheduleSpec& spec, std::uint64_t iter) {
  spec.validate();
  if (iter > spec.total_iters) {
    throw ContractError("phi: iteration " + std::to_string(iter) + " exceeds total " +
                        std::to_string(spec.total_iters));
  }
  const double t = static_cast<double>(iter) / static_cast<double>(spec.total_iters);
  switch (spec.kind) {
    case ScheduleKind::kLinear:
      return 1.0 - t;
    case ScheduleKind::kExponential:
      return std::pow(spec.nu, t);
    case ScheduleKind::kCosine:
      return std::cos(std::numbers::pi / 2.0 * t);
  }
  return 1.0;
}

std::vector<double> lambda_factor(const ScheduleSpec& spec, std::uint64_t iter,
                                  const HeadSet& head_set, std::size_t num_classes) {
  const double head = std::max(phi(spec, iter), spec.alpha);
  std::vector<double> lambda(num_classes, 1.0);
  for (auto c : head_set) {
    if (c < num_classes) lambda[c] = head;
  }
  return lambda;
}

namespace {

std::size_t one_hot_index(std::span<const double> y, std::size_t classes) {
  if (y.size() != classes) throw DimensionError("loss: label length does not match logits");
  std::size_t hot = classes;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      if (hot != classes) throw ContractError("loss: label has more than one hot entry");
      hot = i;
    } else if (y[i] != 0.0) {
      throw ContractError("loss: label entries must be 0 or 1");
    }
  }
  if (hot == classes) throw ContractError("loss: label has no hot entry");
  return hot;
}

}  // namespace

Value ce_loss(const Value& z, std::span<const double> y) {
  if (z.rows() != 1) throw DimensionError("ce_loss: expects a single logit row");
  one_hot_index(y, z.cols());
  std::vector<double> coef(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) coef[i] = -y[i];
  return weighted_sum(log_softmax(z), coef);
}

Value crw_loss(const Value& z, std::span<const double> y, std::span<const double> weights,
               std::span<const double> lambda) {
  if (z.rows() != 1) throw DimensionError("crw_loss: expects a single logit row");
  one_hot_index(y, z.cols());
  if (weights.size() != y.size() || lambda.size() != y.size()) {
    throw DimensionError("crw_loss: weights/lambda length does not match logits");
  }
  std::vector<double> coef(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) coef[i] = -lambda[i] * weights[i] * y[i];
  return weighted_sum(log_softmax(z), coef);
}

Value crw_loss_rows(const Value& z, std::span<const std::uint32_t> labels,
                    std::span<const double> class_coef, std::span<const double> row_scale) {
  const std::size_t c = z.cols();
  if (labels.size() != z.rows()) throw DimensionError("crw_loss_rows: one label per row");
  if (class_coef.size() != c) throw DimensionError("crw_loss_rows: coefficient length");
  if (!row_scale.empty() && row_scale.size() != labels.size()) {
    throw DimensionError("crw_loss_rows: one scale per row");
  }
  std::vector<double> coef(z.size(), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= c) throw ContractError("crw_loss_rows: label out of range");
    const double rs = row_scale.empty() ? 1.0 : row_scale[r];
    coef[r * c + labels[r]] = -class_coef[labels[r]] * rs;
  }
  return weighted_sum(log_softmax(z), coef);
}

}  // namespace sgg
