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

#include <array>
#include <cmath>

#include "sgg/errors.hpp"
#include "sgg/optim.hpp"

namespace sgg {
namespace {

void set_grad(Value& p, std::initializer_list<double> g) {
  std::copy(g.begin(), g.end(), p.mutable_grad().begin());
}

TEST(Sgd, PlainStep) {
  std::vector<Value> params = {Value::parameter({1, 1}, {1.0})};
  set_grad(params[0], {0.5});
  OptState opt;
  sgd_step(params, opt, {0.1, 0.0, 5.0});
  EXPECT_DOUBLE_EQ(params[0].data()[0], 0.95);
  EXPECT_EQ(params[0].grad()[0], 0.0);
  EXPECT_EQ(opt.step_count, 1u);
}

TEST(Sgd, MomentumRecurrence) {
  std::vector<Value> params = {Value::parameter({1, 1}, {0.0})};
  OptState opt;
  const SgdConfig cfg{0.1, 0.9, 5.0};
  set_grad(params[0], {1.0});
  sgd_step(params, opt, cfg);
  EXPECT_NEAR(params[0].data()[0], -0.1, 1e-15);
  set_grad(params[0], {1.0});
  sgd_step(params, opt, cfg);
  EXPECT_NEAR(opt.velocity[0][0], 1.9, 1e-15);
  EXPECT_NEAR(params[0].data()[0], -0.29, 1e-15);
}

TEST(Sgd, ClipsByGlobalNorm) {
  // Gradient (30, 40) has norm 50; clip 5 scales it by 0.1.
  std::vector<Value> params = {Value::parameter({1, 1}, {0.0}), Value::parameter({1, 1}, {0.0})};
  set_grad(params[0], {30.0});
  set_grad(params[1], {40.0});
  EXPECT_DOUBLE_EQ(global_grad_norm(params), 50.0);
  OptState opt;
  sgd_step(params, opt, {1.0, 0.0, 5.0});
  EXPECT_NEAR(params[0].data()[0], -3.0, 1e-14);
  EXPECT_NEAR(params[1].data()[0], -4.0, 1e-14);
}

TEST(Sgd, BelowThresholdIsUnclipped) {
  std::vector<Value> params = {Value::parameter({1, 2}, {0.0, 0.0})};
  set_grad(params[0], {0.3, 0.4});
  OptState opt;
  sgd_step(params, opt, {1.0, 0.0, 5.0});
  EXPECT_DOUBLE_EQ(params[0].data()[0], -0.3);
  EXPECT_DOUBLE_EQ(params[0].data()[1], -0.4);
}

TEST(Sgd, VelocityShapesMatchParameters) {
  std::vector<Value> params = {Value::parameter({2, 3}, std::vector<double>(6, 0.0)),
                               Value::parameter({1, 4}, std::vector<double>(4, 0.0))};
  OptState opt;
  sgd_step(params, opt, {});
  ASSERT_EQ(opt.velocity.size(), 2u);
  EXPECT_EQ(opt.velocity[0].size(), 6u);
  EXPECT_EQ(opt.velocity[1].size(), 4u);
}

TEST(Sgd, RejectsBadHyperparameters) {
  std::vector<Value> params = {Value::parameter({1, 1}, {0.0})};
  OptState opt;
  EXPECT_THROW(sgd_step(params, opt, {0.0, 0.9, 5.0}), ConfigError);
  EXPECT_THROW(sgd_step(params, opt, {-1.0, 0.9, 5.0}), ConfigError);
  EXPECT_THROW(sgd_step(params, opt, {0.1, 1.0, 5.0}), ConfigError);
}

}  // namespace
}  // namespace sgg
