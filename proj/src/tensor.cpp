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

#include "sgg/tensor.hpp"

#include <cblas.h>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "sgg/errors.hpp"

namespace sgg {

std::string Shape::str() const {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

namespace {

thread_local bool g_grad_enabled = true;

void check_finite(const std::string& op, const std::vector<double>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      std::ostringstream os;
      os << op << ": non-finite value at flat index " << i;
      throw NumericError(os.str());
    }
  }
}

void require_same_shape(const char* op, const Value& a, const Value& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

bool any_requires_grad(const std::vector<Value>& vs) {
  return std::any_of(vs.begin(), vs.end(), [](const Value& v) { return v.requires_grad(); });
}

// C += op(A) * op(B), row-major, single-threaded BLAS.
void gemm_acc(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
              const double* a, const double* b, double* c) {
  static const bool single_thread = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)single_thread;
  if (m == 0 || n == 0 || k == 0) return;
  const auto lda = static_cast<blasint>(trans_a ? m : k);
  const auto ldb = static_cast<blasint>(trans_b ? k : n);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<blasint>(m),
              static_cast<blasint>(n), static_cast<blasint>(k), 1.0, a, lda, b, ldb, 1.0, c,
              static_cast<blasint>(n));
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Value Value::constant(Shape shape, std::vector<double> data) {
  if (data.size() != shape.size()) {
    throw DimensionError("constant: data size does not match shape " + shape.str());
  }
  if (shape.rows == 0 || shape.cols == 0) throw DimensionError("constant: empty shape");
  check_finite("constant", data);
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->data = std::move(data);
  n->grad.assign(shape.size(), 0.0);
  n->op = "constant";
  return Value(std::move(n));
}

Value Value::parameter(Shape shape, std::vector<double> data) {
  Value v = constant(shape, std::move(data));
  v.node_->requires_grad = true;
  v.node_->op = "parameter";
  return v;
}

Value Value::zeros(Shape shape, bool requires_grad) {
  Value v = constant(shape, std::vector<double>(shape.size(), 0.0));
  v.node_->requires_grad = requires_grad;
  if (requires_grad) v.node_->op = "parameter";
  return v;
}

double Value::item() const {
  if (size() != 1) throw ContractError("item: value is not a scalar " + shape().str());
  return node_->data[0];
}

void Value::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Value Value::from_op(std::string op, Shape shape, std::vector<double> data,
                     std::vector<Value> parents, std::function<void(Node&)> backward_fn) {
  check_finite(op, data);
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->data = std::move(data);
  n->grad.assign(shape.size(), 0.0);
  n->op = std::move(op);
  n->requires_grad = g_grad_enabled && any_requires_grad(parents);
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_);
    n->backward_fn = std::move(backward_fn);
  }
  return Value(std::move(n));
}

Value matmul(const Value& a, const Value& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + a.shape().str() + " * " +
                         b.shape().str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  gemm_acc(false, false, m, n, k, a.data().data(), b.data().data(), out.data());
  return Value::from_op("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    const double* g = self.grad.data();
    if (na.requires_grad) {
      // dA += dC * B^T
      gemm_acc(false, true, m, k, n, g, nb.data.data(), na.grad.data());
    }
    if (nb.requires_grad) {
      // dB += A^T * dC
      gemm_acc(true, false, k, n, m, na.data.data(), g, nb.grad.data());
    }
  });
}

Value add(const Value& a, const Value& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Value::from_op("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

Value sub(const Value& a, const Value& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Value::from_op("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (na.requires_grad) na.grad[i] += self.grad[i];
      if (nb.requires_grad) nb.grad[i] -= self.grad[i];
    }
  });
}

Value mul(const Value& a, const Value& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Value::from_op("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (na.requires_grad) na.grad[i] += self.grad[i] * nb.data[i];
      if (nb.requires_grad) nb.grad[i] += self.grad[i] * na.data[i];
    }
  });
}

Value scale(const Value& a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  return Value::from_op("scale", a.shape(), std::move(out), {a}, [s](Node& self) {
    Node& na = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * s;
  });
}

Value add_row(const Value& a, const Value& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row: bias " + bias.shape().str() + " does not match " +
                         a.shape().str());
  }
  const std::size_t n = a.rows(), c = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a.data()[r * c + j] + bias.data()[j];
  return Value::from_op("add_row", a.shape(), std::move(out), {a, bias}, [n, c](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const double g = self.grad[r * c + j];
        if (na.requires_grad) na.grad[r * c + j] += g;
        if (nb.requires_grad) nb.grad[j] += g;
      }
    }
  });
}

Value relu(const Value& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.data()[i]);
  return Value::from_op("relu", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& na = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (na.data[i] > 0.0) na.grad[i] += self.grad[i];
  });
}

Value sum(const Value& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return Value::from_op("sum", {1, 1}, {acc}, {a}, [](Node& self) {
    Node& na = *self.parents[0];
    for (double& g : na.grad) g += self.grad[0];
  });
}

Value mean(const Value& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Value weighted_sum(const Value& a, std::span<const double> coeffs) {
  if (coeffs.size() != a.size()) {
    throw DimensionError("weighted_sum: coefficient count does not match " + a.shape().str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) acc += coeffs[i] * a.data()[i];
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return Value::from_op("weighted_sum", {1, 1}, {acc}, {a}, [c = std::move(c)](Node& self) {
    Node& na = *self.parents[0];
    for (std::size_t i = 0; i < c.size(); ++i) na.grad[i] += self.grad[0] * c[i];
  });
}

Value log_softmax(const Value& z) {
  const std::size_t n = z.rows(), c = z.cols();
  std::vector<double> out(z.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = z.data().data() + r * c;
    const double mx = *std::max_element(row, row + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = row[j] - lse;
  }
  return Value::from_op("log_softmax", z.shape(), std::move(out), {z}, [n, c](Node& self) {
    Node& nz = *self.parents[0];
    for (std::size_t r = 0; r < n; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += self.grad[r * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        nz.grad[r * c + j] += self.grad[r * c + j] - std::exp(self.data[r * c + j]) * gs;
      }
    }
  });
}

Value softmax(const Value& z) {
  const std::size_t n = z.rows(), c = z.cols();
  std::vector<double> out(z.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = z.data().data() + r * c;
    const double mx = *std::max_element(row, row + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[r * c + j] = std::exp(row[j] - mx);
      s += out[r * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] /= s;
  }
  return Value::from_op("softmax", z.shape(), std::move(out), {z}, [n, c](Node& self) {
    Node& nz = *self.parents[0];
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[r * c + j] * self.data[r * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        nz.grad[r * c + j] += self.data[r * c + j] * (self.grad[r * c + j] - dot);
      }
    }
  });
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias) {
  const std::size_t n = x.rows(), d = x.cols();
  if (d < 2) throw DimensionError("layer_norm: feature dimension must be >= 2");
  if (gain.shape() != Shape{1, d} || bias.shape() != Shape{1, d}) {
    throw DimensionError("layer_norm: gain/bias must be [1x" + std::to_string(d) + "]");
  }
  std::vector<double> xhat(x.size()), inv_std(n), out(x.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (row[j] - mu) * inv_std[r];
      out[r * d + j] = gain.data()[j] * xhat[r * d + j] + bias.data()[j];
    }
  }
  return Value::from_op(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& nx = *self.parents[0];
        Node& ng = *self.parents[1];
        Node& nb = *self.parents[2];
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < n; ++r) {
          const double* g = self.grad.data() + r * d;
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            if (ng.requires_grad) ng.grad[j] += g[j] * xhat[r * d + j];
            if (nb.requires_grad) nb.grad[j] += g[j];
            dxhat[j] = g[j] * ng.data[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xhat[r * d + j];
          }
          if (!nx.requires_grad) continue;
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            nx.grad[r * d + j] += inv_std[r] * (dxhat[j] - m1 - xhat[r * d + j] * m2);
          }
        }
      });
}

Value gather_rows(const Value& a, std::span<const std::size_t> index) {
  const std::size_t c = a.cols();
  std::vector<double> out(index.size() * c);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(a.data().data() + index[r] * c, c, out.data() + r * c);
  }
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  std::vector<std::size_t> idx(index.begin(), index.end());
  return Value::from_op("gather_rows", {index.size(), c}, std::move(out), {a},
                        [c, idx = std::move(idx)](Node& self) {
                          Node& na = *self.parents[0];
                          for (std::size_t r = 0; r < idx.size(); ++r) {
                            double* dst = na.grad.data() + idx[r] * c;
                            const double* src = self.grad.data() + r * c;
                            for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
                          }
                        });
}

Value slice_rows(const Value& a, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: range out of bounds for " + a.shape().str());
  }
  const std::size_t c = a.cols();
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                          a.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  return Value::from_op("slice_rows", {count, c}, std::move(out), {a}, [begin, c](Node& self) {
    Node& na = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[begin * c + i] += self.grad[i];
  });
}

Value concat_rows(std::span<const Value> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw DimensionError("concat_rows: column counts differ");
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<Value> ps(parts.begin(), parts.end());
  return Value::from_op("concat_rows", {rows, c}, std::move(out), std::move(ps), [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += self.grad[off + i];
      }
      off += p->grad.size();
    }
  });
}

Value concat_cols(std::span<const Value> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t n = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) throw DimensionError("concat_cols: row counts differ");
    cols += p.cols();
  }
  std::vector<double> out(n * cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(p.data().data() + r * p.cols(), p.cols(), out.data() + r * cols + off);
    off += p.cols();
  }
  std::vector<Value> ps(parts.begin(), parts.end());
  return Value::from_op("concat_cols", {n, cols}, std::move(out), std::move(ps),
                        [n, cols](Node& self) {
                          std::size_t off = 0;
                          for (auto& p : self.parents) {
                            const std::size_t pc = p->shape.cols;
                            if (p->requires_grad) {
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t j = 0; j < pc; ++j)
                                  p->grad[r * pc + j] += self.grad[r * cols + off + j];
                            }
                            off += pc;
                          }
                        });
}

Value segment_mean(const Value& a, const Segments& segments) {
  const std::size_t c = a.cols();
  std::vector<double> out(segments.size() * c, 0.0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.empty()) throw DimensionError("segment_mean: empty segment");
    for (std::size_t r : seg) {
      if (r >= a.rows()) throw DimensionError("segment_mean: row index out of range");
      for (std::size_t j = 0; j < c; ++j) out[s * c + j] += a.data()[r * c + j];
    }
    const double inv = 1.0 / static_cast<double>(seg.size());
    for (std::size_t j = 0; j < c; ++j) out[s * c + j] *= inv;
  }
  if (segments.empty()) throw DimensionError("segment_mean: no segments");
  return Value::from_op("segment_mean", {segments.size(), c}, std::move(out), {a},
                        [c, segments](Node& self) {
                          Node& na = *self.parents[0];
                          for (std::size_t s = 0; s < segments.size(); ++s) {
                            const double inv = 1.0 / static_cast<double>(segments[s].size());
                            for (std::size_t r : segments[s])
                              for (std::size_t j = 0; j < c; ++j)
                                na.grad[r * c + j] += self.grad[s * c + j] * inv;
                          }
                        });
}

Value attention(const Value& q, const Value& k, const Value& v, std::size_t heads,
                const Segments& segments, std::vector<std::vector<double>>* weights_out) {
  require_same_shape("attention", q, k);
  require_same_shape("attention", q, v);
  const std::size_t t = q.rows(), d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: model width " + std::to_string(d) +
                      " not divisible by head count " + std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  {
    std::vector<char> seen(t, 0);
    for (const auto& seg : segments) {
      if (seg.empty()) throw DimensionError("attention: empty segment");
      for (std::size_t r : seg) {
        if (r >= t || seen[r]) throw DimensionError("attention: segments must partition rows");
        seen[r] = 1;
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw DimensionError("attention: segments must cover every row");
    }
  }
  const double* Q = q.data().data();
  const double* K = k.data().data();
  const double* V = v.data().data();
  std::vector<double> out(t * d, 0.0);
  // Attention matrices, flattened per (segment, head).
  std::vector<std::vector<double>> probs;
  probs.reserve(segments.size() * heads);
  for (const auto& seg : segments) {
    const std::size_t m = seg.size();
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      std::vector<double> a(m * m);
      for (std::size_t i = 0; i < m; ++i) {
        const double* qi = Q + seg[i] * d + off;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
          const double* kj = K + seg[j] * d + off;
          double s = 0.0;
          for (std::size_t e = 0; e < dh; ++e) s += qi[e] * kj[e];
          a[i * m + j] = s * inv_sqrt;
          mx = std::max(mx, a[i * m + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          a[i * m + j] = std::exp(a[i * m + j] - mx);
          z += a[i * m + j];
        }
        double* oi = out.data() + seg[i] * d + off;
        for (std::size_t j = 0; j < m; ++j) {
          a[i * m + j] /= z;
          const double* vj = V + seg[j] * d + off;
          for (std::size_t e = 0; e < dh; ++e) oi[e] += a[i * m + j] * vj[e];
        }
      }
      probs.push_back(std::move(a));
    }
  }
  if (weights_out != nullptr) *weights_out = probs;
  return Value::from_op(
      "attention", q.shape(), std::move(out), {q, k, v},
      [d, dh, heads, inv_sqrt, segments, probs = std::move(probs)](Node& self) {
        Node& nq = *self.parents[0];
        Node& nk = *self.parents[1];
        Node& nv = *self.parents[2];
        const double* G = self.grad.data();
        std::size_t pi = 0;
        std::vector<double> da, ds;
        for (const auto& seg : segments) {
          const std::size_t m = seg.size();
          da.resize(m);
          for (std::size_t h = 0; h < heads; ++h, ++pi) {
            const std::vector<double>& a = probs[pi];
            const std::size_t off = h * dh;
            for (std::size_t i = 0; i < m; ++i) {
              const double* gi = G + seg[i] * d + off;
              double dot = 0.0;
              for (std::size_t j = 0; j < m; ++j) {
                const double* vj = nv.data.data() + seg[j] * d + off;
                double s = 0.0;
                for (std::size_t e = 0; e < dh; ++e) s += gi[e] * vj[e];
                da[j] = s;
                dot += a[i * m + j] * s;
                if (nv.requires_grad) {
                  double* gvj = nv.grad.data() + seg[j] * d + off;
                  for (std::size_t e = 0; e < dh; ++e) gvj[e] += a[i * m + j] * gi[e];
                }
              }
              const double* qi = nq.data.data() + seg[i] * d + off;
              double* gqi = nq.grad.data() + seg[i] * d + off;
              for (std::size_t j = 0; j < m; ++j) {
                const double dsij = a[i * m + j] * (da[j] - dot) * inv_sqrt;
                if (dsij == 0.0) continue;
                const double* kj = nk.data.data() + seg[j] * d + off;
                if (nq.requires_grad)
                  for (std::size_t e = 0; e < dh; ++e) gqi[e] += dsij * kj[e];
                if (nk.requires_grad) {
                  double* gkj = nk.grad.data() + seg[j] * d + off;
                  for (std::size_t e = 0; e < dh; ++e) gkj[e] += dsij * qi[e];
                }
              }
            }
          }
        }
      });
}

void backward(const Value& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar");
  }
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root = loss.node().get();
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace sgg
