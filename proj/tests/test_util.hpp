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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <unordered_set>
#include <vector>

#include "sgg/tensor.hpp"

namespace sgg::testing {

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Value random_param(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return Value::parameter(s, random_vector(s.size(), rng, lo, hi));
}

inline Value random_const(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return Value::constant(s, random_vector(s.size(), rng, lo, hi));
}

// |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor keeps
// entries whose true gradient is zero from dividing roundoff by zero.
inline constexpr double kGradFloor = 1e-6;

// Largest relative error between backward() and central differences of the
// scalar built by f. With max_entries > 0, each input is checked on at most
// that many entries drawn with a fixed seed; otherwise on every entry.
inline double max_grad_error(const std::function<Value()>& f, std::vector<Value> inputs,
                             double h = 1e-4, std::size_t max_entries = 0) {
  for (auto& v : inputs) v.zero_grad();
  backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& v : inputs) analytic.emplace_back(v.grad().begin(), v.grad().end());
  std::mt19937_64 pick(0x5eed);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto data = inputs[i].mutable_data();
    std::vector<std::size_t> entries(data.size());
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = k;
    if (max_entries > 0 && entries.size() > max_entries) {
      std::shuffle(entries.begin(), entries.end(), pick);
      entries.resize(max_entries);
    }
    for (std::size_t k : entries) {
      const double saved = data[k];
      data[k] = saved + h;
      const double up = f().item();
      data[k] = saved - h;
      const double down = f().item();
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradFloor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

// Signs of every relu input reachable from root, in a fixed traversal order.
// Two evaluations of the same graph builder agree iff no relu crossed its kink.
inline std::vector<bool> relu_signature(const Value& root) {
  std::vector<bool> sig;
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{root.node().get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->op == "relu") {
      for (double x : n->parents.front()->data) sig.push_back(x > 0.0);
    }
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  return sig;
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // entries whose [x-h, x+h] straddles a relu kink
};

// max_grad_error that skips entries where a relu input changes sign within
// the difference interval; elsewhere the function is smooth and the central
// difference is held to the same tolerance.
inline GradCheck grad_check_piecewise(const std::function<Value()>& f, std::vector<Value> inputs,
                                      double h = 1e-4, std::size_t max_entries = 0) {
  for (auto& v : inputs) v.zero_grad();
  const Value base = f();
  const std::vector<bool> base_sig = relu_signature(base);
  backward(base);
  std::vector<std::vector<double>> analytic;
  for (auto& v : inputs) analytic.emplace_back(v.grad().begin(), v.grad().end());
  std::mt19937_64 pick(0x5eed);
  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto data = inputs[i].mutable_data();
    std::vector<std::size_t> entries(data.size());
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = k;
    if (max_entries > 0 && entries.size() > max_entries) {
      std::shuffle(entries.begin(), entries.end(), pick);
      entries.resize(max_entries);
    }
    for (std::size_t k : entries) {
      const double saved = data[k];
      data[k] = saved + h;
      const Value up = f();
      data[k] = saved - h;
      const Value down = f();
      data[k] = saved;
      if (relu_signature(up) != base_sig || relu_signature(down) != base_sig) {
        ++out.kinks;
        continue;
      }
      ++out.checked;
      const double numeric = (up.item() - down.item()) / (2.0 * h);
      const double a = analytic[i][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradFloor});
      out.worst = std::max(out.worst, std::abs(a - numeric) / denom);
    }
  }
  return out;
}

// Random scalar projection that makes any op output a loss.
inline Value project_to_scalar(const Value& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return weighted_sum(v, random_vector(v.size(), rng));
}

}  // namespace sgg::testing
