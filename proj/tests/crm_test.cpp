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
#include <random>

#include "sgg/crm.hpp"
#include "sgg/errors.hpp"
#include "test_util.hpp"

namespace sgg {
namespace {

using testing::random_vector;

ScheduleSpec spec(ScheduleKind k, std::uint64_t total = 1000) {
  ScheduleSpec s;
  s.kind = k;
  s.total_iters = total;
  return s;
}

std::vector<double> onehot(std::size_t c, std::size_t i) {
  std::vector<double> y(c, 0.0);
  y[i] = 1.0;
  return y;
}

TEST(Phi, Linear) {
  const auto s = spec(ScheduleKind::kLinear);
  EXPECT_EQ(phi(s, 0), 1.0);
  EXPECT_EQ(phi(s, 500), 0.5);
  EXPECT_EQ(phi(s, 1000), 0.0);
}

TEST(Phi, Exponential) {
  const auto s = spec(ScheduleKind::kExponential);
  EXPECT_EQ(phi(s, 0), 1.0);
  EXPECT_NEAR(phi(s, 1000), 0.1, 1e-15);
}

TEST(Phi, Cosine) {
  const auto s = spec(ScheduleKind::kCosine);
  EXPECT_EQ(phi(s, 0), 1.0);
  EXPECT_NEAR(phi(s, 500), 0.70710678118654752, 1e-15);
  EXPECT_NEAR(phi(s, 1000), 0.0, 1e-15);
}

TEST(Phi, NonIncreasingForEveryKind) {
  for (auto k : {ScheduleKind::kLinear, ScheduleKind::kExponential, ScheduleKind::kCosine}) {
    const auto s = spec(k, 300);
    for (std::uint64_t l = 1; l <= 300; ++l) EXPECT_LE(phi(s, l), phi(s, l - 1));
  }
}

TEST(Phi, PastEndIsContractError) {
  EXPECT_THROW(phi(spec(ScheduleKind::kLinear), 1001), ContractError);
}

TEST(Schedule, ParseAndValidate) {
  EXPECT_EQ(parse_schedule_kind("cosine"), ScheduleKind::kCosine);
  EXPECT_EQ(to_string(ScheduleKind::kExponential), "exponential");
  EXPECT_THROW(parse_schedule_kind("step"), ConfigError);
  ScheduleSpec s;
  s.nu = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.nu = 0.1;
  s.alpha = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Lambda, HeadAndTailBranches) {
  const auto s = spec(ScheduleKind::kLinear);
  const HeadSet head = {0, 1, 2};
  const auto at0 = lambda_factor(s, 0, head, 5);
  for (double v : at0) EXPECT_EQ(v, 1.0);
  const auto late = lambda_factor(s, 900, head, 5);
  EXPECT_EQ(late[0], 0.25);
  EXPECT_EQ(late[1], 0.25);
  EXPECT_EQ(late[3], 1.0);
  EXPECT_EQ(late[4], 1.0);
}

TEST(Lambda, MonotoneAndFloored) {
  const HeadSet head = {0, 3};
  for (auto k : {ScheduleKind::kLinear, ScheduleKind::kExponential, ScheduleKind::kCosine}) {
    const auto s = spec(k, 200);
    std::vector<double> prev = lambda_factor(s, 0, head, 6);
    for (std::uint64_t l = 1; l <= 200; ++l) {
      const auto cur = lambda_factor(s, l, head, 6);
      for (std::size_t c = 0; c < 6; ++c) {
        EXPECT_LE(cur[c], prev[c]);
        EXPECT_GE(cur[c], s.alpha);
        if (!head.count(static_cast<std::uint32_t>(c))) EXPECT_EQ(cur[c], 1.0);
      }
      prev = cur;
    }
  }
}

TEST(CeLoss, UniformAndSaturated) {
  EXPECT_NEAR(ce_loss(Value::constant({1, 4}, {0, 0, 0, 0}), onehot(4, 2)).item(),
              1.3862943611198906, 1e-12);
  EXPECT_LT(ce_loss(Value::constant({1, 4}, {0, 30, 0, 0}), onehot(4, 1)).item(), 1e-12);
}

TEST(CeLoss, ExtendedPrecisionOracle) {
  // -log_softmax(z)[3] for the 6-vector below, evaluated to 50 digits.
  const Value z = Value::constant({1, 6}, {0.3, -1.7, 2.25, 0.0, -0.6, 1.1});
  EXPECT_NEAR(ce_loss(z, onehot(6, 3)).item(), 2.7455550730433125892, 1e-12);
}

TEST(CeLoss, RejectsNonOneHot) {
  const Value z = Value::zeros({1, 3});
  EXPECT_THROW(ce_loss(z, std::vector<double>{1, 1, 0}), ContractError);
  EXPECT_THROW(ce_loss(z, std::vector<double>{0, 0, 0}), ContractError);
  EXPECT_THROW(ce_loss(z, std::vector<double>{0.5, 0.5, 0}), ContractError);
}

TEST(CrwLoss, ReducesToCrossEntropy) {
  std::mt19937_64 rng(21);
  const std::vector<double> ones(7, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Value z = Value::constant({1, 7}, random_vector(7, rng, -4, 4));
    const auto y = onehot(7, static_cast<std::size_t>(rng() % 7));
    EXPECT_NEAR(crw_loss(z, y, ones, ones).item(), ce_loss(z, y).item(), 1e-12);
  }
}

TEST(CrwLoss, HeadLabelLateInTraining) {
  const auto s = spec(ScheduleKind::kLinear);
  const HeadSet head = {0, 1};
  const Value z = Value::constant({1, 4}, {0.4, -0.2, 1.3, 0.0});
  const auto y = onehot(4, 1);
  const std::vector<double> w(4, 1.0);
  const auto lam = lambda_factor(s, 1000, head, 4);
  EXPECT_NEAR(crw_loss(z, y, w, lam).item(), 0.25 * ce_loss(z, y).item(), 1e-15);
}

TEST(CrwLoss, TailLabelScalesByWeight) {
  const Value z = Value::constant({1, 4}, {0.4, -0.2, 1.3, 0.0});
  const auto y = onehot(4, 3);
  const std::vector<double> w = {1, 1, 1, 2.5};
  const std::vector<double> lam = {0.25, 0.25, 1, 1};
  EXPECT_NEAR(crw_loss(z, y, w, lam).item(), 2.5 * ce_loss(z, y).item(), 1e-14);
}

TEST(CrwLoss, GradientIsScaledSoftmaxMinusLabel) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 20; ++t) {
    Value z = Value::parameter({1, 6}, random_vector(6, rng, -3, 3));
    const std::size_t gt = rng() % 6;
    const auto y = onehot(6, gt);
    const auto w = random_vector(6, rng, 0.2, 3.0);
    const auto lam = random_vector(6, rng, 0.25, 1.0);
    backward(crw_loss(z, y, w, lam));
    double denom = 0.0;
    for (double v : z.data()) denom += std::exp(v);
    for (std::size_t i = 0; i < 6; ++i) {
      const double expect = lam[gt] * w[gt] * (std::exp(z.data()[i]) / denom - y[i]);
      EXPECT_NEAR(z.grad()[i], expect, 1e-10);
    }
  }
}

TEST(CrwLoss, HeadLabelRatioBetweenStartAndEnd) {
  const HeadSet head = {0, 1};
  const Value z = Value::constant({1, 3}, {0.1, 0.9, -0.5});
  const auto y = onehot(3, 1);
  const std::vector<double> w = {0.5, 0.8, 1.7};
  for (auto k : {ScheduleKind::kLinear, ScheduleKind::kExponential, ScheduleKind::kCosine}) {
    const auto s = spec(k);
    const double start = crw_loss(z, y, w, lambda_factor(s, 0, head, 3)).item();
    const double end = crw_loss(z, y, w, lambda_factor(s, 1000, head, 3)).item();
    EXPECT_GE(end, s.alpha * start - 1e-15);
    EXPECT_LE(end, start + 1e-15);
  }
}

TEST(CrwLossRows, EqualsSumOfRowLosses) {
  std::mt19937_64 rng(23);
  const Value z = Value::constant({5, 4}, random_vector(20, rng, -2, 2));
  const std::vector<std::uint32_t> labels = {0, 3, 1, 1, 2};
  const std::vector<double> coef = {0.3, 1.2, 0.7, 2.0};
  double expect = 0.0;
  for (std::size_t r = 0; r < 5; ++r) {
    const std::vector<std::size_t> idx = {r};
    expect += crw_loss(gather_rows(z, idx), onehot(4, labels[r]), coef,
                       std::vector<double>(4, 1.0)).item();
  }
  EXPECT_NEAR(crw_loss_rows(z, labels, coef).item(), expect, 1e-13);
}

}  // namespace
}  // namespace sgg
