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

#include "sgg/nn.hpp"

#include <cmath>
#include <numeric>

#include "sgg/errors.hpp"

namespace sgg {

Value xavier(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> w(in * out);
  for (auto& x : w) x = u(rng);
  return Value::parameter({in, out}, std::move(w));
}

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight(xavier(in, out, rng)), bias(Value::zeros({1, out}, true)) {}

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(std::size_t dim)
    : gain(Value::parameter({1, dim}, std::vector<double>(dim, 1.0))),
      bias(Value::zeros({1, dim}, true)) {}

void LayerNorm::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

MultiHeadAttention::MultiHeadAttention(std::size_t dim, std::size_t heads, std::mt19937_64& rng)
    : heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention: model width " + std::to_string(dim) +
                      " not divisible by head count " + std::to_string(heads));
  }
  q_ = Linear(dim, dim, rng);
  k_ = Linear(dim, dim, rng);
  v_ = Linear(dim, dim, rng);
  o_ = Linear(dim, dim, rng);
}

Value MultiHeadAttention::operator()(const Value& x, const Segments& segments,
                                     std::vector<std::vector<double>>* weights_out) const {
  return o_(attention(q_(x), k_(x), v_(x), heads_, segments, weights_out));
}

void MultiHeadAttention::collect(ParamList& out, const std::string& prefix) const {
  q_.collect(out, prefix + ".q");
  k_.collect(out, prefix + ".k");
  v_.collect(out, prefix + ".v");
  o_.collect(out, prefix + ".o");
}

Segments single_segment(std::size_t n) {
  Segments s(1);
  s[0].resize(n);
  std::iota(s[0].begin(), s[0].end(), std::size_t{0});
  return s;
}

}  // namespace sgg
