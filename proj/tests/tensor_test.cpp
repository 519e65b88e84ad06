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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sgg/errors.hpp"
#include "sgg/nn.hpp"
#include "sgg/tensor.hpp"
#include "grad_suite.hpp"
#include "test_util.hpp"

namespace sgg {
namespace {

using testing::max_grad_error;
using testing::project_to_scalar;
using testing::random_const;
using testing::random_param;
using testing::random_vector;

constexpr int kSeeds = 20;
constexpr double kGradTol = 1e-4;

TEST(Matmul, IdentityAndZero) {
  std::mt19937_64 rng(1);
  const Value a = random_const({3, 4}, rng);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  const Value c = matmul(a, Value::constant({4, 4}, eye));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(c.data()[i], a.data()[i]);
  const Value z = matmul(a, Value::zeros({4, 2}));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(2);
  const Value a = random_const({5, 4}, rng);
  const Value b = random_const({4, 3}, rng);
  const Value c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 4; ++p) acc += a.at(i, p) * b.at(p, j);
      EXPECT_NEAR(c.at(i, j), acc, 1e-12);
    }
  }
}

TEST(Matmul, ShapeMismatch) {
  EXPECT_THROW(matmul(Value::zeros({2, 3}), Value::zeros({2, 3})), DimensionError);
}

TEST(LogSoftmax, Uniform) {
  const Value z = log_softmax(Value::constant({1, 4}, {0.7, 0.7, 0.7, 0.7}));
  for (double v : z.data()) EXPECT_NEAR(v, -1.3862943611198906, 1e-12);
}

TEST(LogSoftmax, ShiftInvariance) {
  std::mt19937_64 rng(3);
  const auto z = random_vector(7, rng, -3, 3);
  auto shifted = z;
  for (auto& v : shifted) v += 41.5;
  const Value a = log_softmax(Value::constant({1, 7}, z));
  const Value b = log_softmax(Value::constant({1, 7}, shifted));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(LogSoftmax, ExtendedPrecisionOracle) {
  // 50-digit evaluation of z - max - log(sum exp(z - max)).
  const Value z = log_softmax(Value::constant({1, 6}, {0.3, -1.7, 2.25, 0.0, -0.6, 1.1}));
  const double expected[6] = {-2.4455550730433125892, -4.4455550730433125892,
                              -0.4955550730433125892, -2.7455550730433125892,
                              -3.3455550730433125892, -1.6455550730433125892};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(z.data()[i], expected[i], 1e-12);
}

TEST(LogSoftmax, StableForLargeMagnitudes) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Value z = log_softmax(random_const({3, 9}, rng, -1e4, 1e4));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 9; ++c) s += std::exp(z.at(r, c));
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(LogSoftmax, NonFiniteInputIsNumericError) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(log_softmax(Value::constant({1, 3}, {0.0, inf, 1.0})), NumericError);
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  const Value y = layer_norm(Value::constant({1, 5}, {2.5, 2.5, 2.5, 2.5, 2.5}),
                             Value::constant({1, 5}, {1, 1, 1, 1, 1}), Value::zeros({1, 5}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, StandardizesRows) {
  std::mt19937_64 rng(5);
  const Value y = layer_norm(random_const({4, 12}, rng, -5, 5),
                             Value::constant({1, 12}, std::vector<double>(12, 1.0)),
                             Value::zeros({1, 12}));
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0.0, v = 0.0;
    for (std::size_t c = 0; c < 12; ++c) m += y.at(r, c) / 12.0;
    for (std::size_t c = 0; c < 12; ++c) v += (y.at(r, c) - m) * (y.at(r, c) - m) / 12.0;
    EXPECT_NEAR(m, 0.0, 1e-4);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
}

TEST(LayerNorm, MatchesTwoPassOracle) {
  std::mt19937_64 rng(6);
  const Value x = random_const({3, 8}, rng, -2, 2);
  const Value g = random_const({1, 8}, rng, 0.5, 1.5);
  const Value b = random_const({1, 8}, rng);
  const Value y = layer_norm(x, g, b);
  for (std::size_t r = 0; r < 3; ++r) {
    long double m = 0.0L, var = 0.0L;
    for (std::size_t c = 0; c < 8; ++c) m += x.at(r, c);
    m /= 8.0L;
    for (std::size_t c = 0; c < 8; ++c) var += (x.at(r, c) - m) * (x.at(r, c) - m);
    var /= 8.0L;
    for (std::size_t c = 0; c < 8; ++c) {
      const long double expect =
          (x.at(r, c) - m) / std::sqrt(var + 1e-5L) * g.at(0, c) + b.at(0, c);
      EXPECT_NEAR(y.at(r, c), static_cast<double>(expect), 1e-10);
    }
  }
}

TEST(LayerNorm, RejectsSingleColumn) {
  EXPECT_THROW(layer_norm(Value::zeros({2, 1}), Value::zeros({1, 1}), Value::zeros({1, 1})),
               DimensionError);
}

TEST(Attention, SingleTokenWeightIsOne) {
  std::mt19937_64 rng(7);
  MultiHeadAttention mha(8, 2, rng);
  const Value x = random_const({1, 8}, rng);
  std::vector<std::vector<double>> w;
  const Value y = mha(x, single_segment(1), &w);
  ASSERT_EQ(w.size(), 2u);
  for (const auto& head : w) {
    ASSERT_EQ(head.size(), 1u);
    EXPECT_EQ(head[0], 1.0);
  }
  const Value expect = mha.output()(mha.value()(x));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(y.data()[i], expect.data()[i], 1e-14);
}

TEST(Attention, IdenticalRowsGiveUniformWeights) {
  std::mt19937_64 rng(8);
  MultiHeadAttention mha(8, 4, rng);
  const auto row = random_vector(8, rng);
  std::vector<double> data;
  for (int i = 0; i < 5; ++i) data.insert(data.end(), row.begin(), row.end());
  std::vector<std::vector<double>> w;
  mha(Value::constant({5, 8}, data), single_segment(5), &w);
  for (const auto& head : w) {
    for (double v : head) EXPECT_NEAR(v, 0.2, 1e-15);
  }
}

TEST(Attention, MatchesStepByStepReference) {
  std::mt19937_64 rng(9);
  const std::size_t n = 4, d = 8, h = 2, dh = d / h;
  const Value q = random_const({n, d}, rng);
  const Value k = random_const({n, d}, rng);
  const Value v = random_const({n, d}, rng);
  const Value y = attention(q, k, v, h, single_segment(n));
  for (std::size_t head = 0; head < h; ++head) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      double mx = -1e300;
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q.at(i, head * dh + c) * k.at(j, head * dh + c);
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < dh; ++c) {
        double out = 0.0;
        for (std::size_t j = 0; j < n; ++j) out += s[j] / z * v.at(j, head * dh + c);
        EXPECT_NEAR(y.at(i, head * dh + c), out, 1e-10);
      }
    }
  }
}

TEST(Attention, SegmentsDoNotMix) {
  std::mt19937_64 rng(10);
  const Value q = random_const({5, 4}, rng);
  const Value k = random_const({5, 4}, rng);
  const Value v = random_const({5, 4}, rng);
  const Value joint = attention(q, k, v, 2, {{0, 2}, {1, 3, 4}});
  const Value first = attention(gather_rows(q, std::vector<std::size_t>{0, 2}),
                                gather_rows(k, std::vector<std::size_t>{0, 2}),
                                gather_rows(v, std::vector<std::size_t>{0, 2}), 2, single_segment(2));
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(joint.at(0, c), first.at(0, c), 1e-14);
    EXPECT_NEAR(joint.at(2, c), first.at(1, c), 1e-14);
  }
}

TEST(Attention, HeadsMustDivideWidth) {
  std::mt19937_64 rng(11);
  EXPECT_THROW(MultiHeadAttention(10, 4, rng), ConfigError);
  const Value x = Value::zeros({2, 6});
  EXPECT_THROW(attention(x, x, x, 4, single_segment(2)), ConfigError);
}

TEST(Backward, Square) {
  Value x = Value::parameter({1, 1}, {3.0});
  backward(mul(x, x));
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, FanOutAccumulates) {
  Value x = Value::parameter({1, 1}, {1.25});
  backward(add(x, x));
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(Backward, DagEqualsSumOfPaths) {
  // loss = a*b + exp-free path a*a*c ; d/da = b + 2ac, d/db = a, d/dc = a^2
  Value a = Value::parameter({1, 1}, {0.7});
  Value b = Value::parameter({1, 1}, {-1.3});
  Value c = Value::parameter({1, 1}, {2.1});
  const Value aa = mul(a, a);
  backward(add(mul(a, b), mul(aa, c)));
  EXPECT_NEAR(a.grad()[0], -1.3 + 2 * 0.7 * 2.1, 1e-15);
  EXPECT_NEAR(b.grad()[0], 0.7, 1e-15);
  EXPECT_NEAR(c.grad()[0], 0.49, 1e-15);
}

TEST(Backward, NonScalarIsContractError) {
  EXPECT_THROW(backward(Value::parameter({1, 2}, {1.0, 2.0})), ContractError);
}

TEST(NoGradGuard, RecordsNoGraph) {
  Value x = Value::parameter({1, 2}, {1.0, 2.0});
  {
    NoGradGuard guard;
    const Value y = scale(x, 2.0);
    EXPECT_FALSE(y.requires_grad());
    EXPECT_TRUE(y.node()->parents.empty());
  }
  EXPECT_TRUE(scale(x, 2.0).requires_grad());
}

TEST(Determinism, BitwiseRepeatable) {
  auto run = [] {
    std::mt19937_64 rng(12);
    MultiHeadAttention mha(8, 2, rng);
    const Value x = random_param({3, 8}, rng);
    const Value loss = project_to_scalar(layer_norm(mha(x, single_segment(3)),
                                                    Value::constant({1, 8}, std::vector<double>(8, 1.0)),
                                                    Value::zeros({1, 8})),
                                         5);
    backward(loss);
    std::vector<double> out(x.grad().begin(), x.grad().end());
    out.push_back(loss.item());
    return out;
  };
  EXPECT_EQ(run(), run());
}

// Central-difference checks for each primitive, composed with a random linear
// functional so every output entry contributes.
class PrimitiveGradients : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradients, AllPrimitives) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  testing::primitive_grad_suite(seed, [&](const std::string& name, double err) {
    EXPECT_LT(err, kGradTol) << name << " seed " << seed;
  });
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveGradients, ::testing::Range(1, kSeeds + 1));

}  // namespace
}  // namespace sgg
