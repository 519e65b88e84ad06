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

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every Value is a rows x cols matrix of doubles (vectors are 1 x n). Ops
// build a define-by-run graph; backward() walks it once in reverse
// topological order and accumulates gradients additively across fan-out.
// Any op that produces a non-finite entry throws NumericError.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sgg {

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward_fn;
};

// Shared handle to a graph node. Copies alias the same storage.
class Value {
 public:
  Value() = default;

  static Value constant(Shape shape, std::vector<double> data);
  static Value parameter(Shape shape, std::vector<double> data);
  static Value zeros(Shape shape, bool requires_grad = false);
  static Value scalar(double v) { return constant({1, 1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->shape.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& op() const { return node_->op; }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }

  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }
  double grad_at(std::size_t r, std::size_t c) const { return node_->grad[r * cols() + c]; }
  double item() const;

  void zero_grad();
  const std::shared_ptr<Node>& node() const { return node_; }

  // Internal: wraps a freshly computed node, checks finiteness.
  static Value from_op(std::string op, Shape shape, std::vector<double> data,
                       std::vector<Value> parents, std::function<void(Node&)> backward_fn);

 private:
  explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Row groups for segmented attention: each segment lists the row indices that
// attend to one another. Every row belongs to exactly one segment.
using Segments = std::vector<std::vector<std::size_t>>;

Value matmul(const Value& a, const Value& b);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double s);
// a [N x C] + bias [1 x C] broadcast over rows.
Value add_row(const Value& a, const Value& bias);
Value relu(const Value& a);

Value sum(const Value& a);
Value mean(const Value& a);
// Sum of coeffs[k] * a[k] with constant coefficients of a's size.
Value weighted_sum(const Value& a, std::span<const double> coeffs);

// Row-wise, max-subtracted.
Value log_softmax(const Value& z);
Value softmax(const Value& z);

// Row-wise normalization with population variance and epsilon 1e-5.
Value layer_norm(const Value& x, const Value& gain, const Value& bias);
inline constexpr double kLayerNormEps = 1e-5;

Value gather_rows(const Value& a, std::span<const std::size_t> index);
Value slice_rows(const Value& a, std::size_t begin, std::size_t count);
Value concat_rows(std::span<const Value> parts);
Value concat_cols(std::span<const Value> parts);
// One output row per segment: the mean of that segment's rows.
Value segment_mean(const Value& a, const Segments& segments);

// Scaled dot-product attention with `heads` heads, restricted to segments.
// Inputs are [T x D]; the head slices are contiguous column blocks of D/heads.
// When weights_out is given it receives, per segment and head, the row-major
// |seg| x |seg| attention matrix.
Value attention(const Value& q, const Value& k, const Value& v, std::size_t heads,
                const Segments& segments,
                std::vector<std::vector<double>>* weights_out = nullptr);

// While alive on a thread, ops on that thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Fills every reachable requires_grad node's grad with d loss / d node.
void backward(const Value& loss);

}  // namespace sgg
