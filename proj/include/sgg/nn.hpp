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

// Parameterized layers on top of the autodiff primitives.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sgg/tensor.hpp"

namespace sgg {

struct NamedParam {
  std::string name;
  Value value;
};

using ParamList = std::vector<NamedParam>;

// Glorot-uniform [in x out] matrix.
Value xavier(std::size_t in, std::size_t out, std::mt19937_64& rng);

struct Linear {
  Value weight;  // [in x out]
  Value bias;    // [1 x out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Value operator()(const Value& x) const { return add_row(matmul(x, weight), bias); }
  void collect(ParamList& out, const std::string& prefix) const;
};

struct LayerNorm {
  Value gain;
  Value bias;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);
  Value operator()(const Value& x) const { return layer_norm(x, gain, bias); }
  void collect(ParamList& out, const std::string& prefix) const;
};

// Self-attention: queries, keys and values are projections of the same input.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, std::mt19937_64& rng);

  Value operator()(const Value& x, const Segments& segments,
                   std::vector<std::vector<double>>* weights_out = nullptr) const;
  void collect(ParamList& out, const std::string& prefix) const;

  std::size_t heads() const { return heads_; }
  const Linear& query() const { return q_; }
  const Linear& key() const { return k_; }
  const Linear& value() const { return v_; }
  const Linear& output() const { return o_; }

 private:
  std::size_t heads_ = 1;
  Linear q_, k_, v_, o_;
};

// One segment covering rows [0, n).
Segments single_segment(std::size_t n);

}  // namespace sgg
