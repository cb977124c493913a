// Copyright 2026 The coldstart Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coldstart/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include <boost/math/special_functions/digamma.hpp>

#include "coldstart/error.hpp"
#include "coldstart/kernels.hpp"

namespace coldstart::ad {

namespace {

thread_local Tape* g_tape = nullptr;

using NodePtr = std::shared_ptr<Node>;

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (g_tape == nullptr) {
    return false;
  }
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor make(Shape shape, std::vector<double> data, bool track) {
  return Tensor(std::move(shape), std::move(data), track);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(Errc::kShapeMismatch, std::string(op) + ": " +
                                          shape_str(a.shape()) + " vs " +
                                          shape_str(b.shape()));
  }
}

void require_2d(const Tensor& x, const char* op) {
  if (x.dim() != 2) {
    throw Error(Errc::kShapeMismatch,
                std::string(op) + " expects a matrix, got " + shape_str(x.shape()));
  }
}

// Elementwise unary op whose derivative is a function of (x, y).
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(in[i]);
  }
  const bool track = tracking({&x});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node();
    NodePtr yn = y.node();
    g_tape->record(yn, [xn, yn, dfdx]() {
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += yn->grad[i] * dfdx(xn->data[i], yn->data[i]);
      }
    });
  }
  return y;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t last_dim(const Tensor& x) {
  return x.shape().empty() ? 1 : x.shape().back();
}

} // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? ", " : "") << shape[i];
  }
  os << ']';
  return os.str();
}

void Node::accumulate(std::size_t i, double g) { grad_buffer()[i] += g; }

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != data.size()) {
    grad.assign(data.size(), 0.0);
  }
  return grad;
}

////////////////////////////////////////////////////////////////////////////////
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  if (shape_size(shape) != data.size()) {
    throw Error(Errc::kShapeMismatch, "shape " + shape_str(shape) + " holds " +
                                          std::to_string(shape_size(shape)) +
                                          " values, got " +
                                          std::to_string(data.size()));
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data, bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  return dim() >= 2 ? shape()[dim() - 2] : 1;
}

std::size_t Tensor::cols() const { return last_dim(*this); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->data[r * cols() + c];
}

double Tensor::item() const {
  if (size() != 1) {
    throw Error(Errc::kNotScalar, "item() on " + shape_str(shape()));
  }
  return node_->data[0];
}

Tensor Tensor::detach() const {
  return Tensor(node_->shape, node_->data, false);
}

////////////////////////////////////////////////////////////////////////////////
// Tape

void Tape::record(std::shared_ptr<Node> output, Backward backward) {
  entries_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw Error(Errc::kNotScalar,
                "backward needs a scalar loss, got " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) {
    return;
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output->grad.empty()) {
      it->backward();
    }
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_tape) { g_tape = &tape; }
TapeScope::~TapeScope() { g_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_tape) { g_tape = nullptr; }
NoGradScope::~NoGradScope() { g_tape = previous_; }

Tape* active_tape() { return g_tape; }

void backward(const Tensor& loss) {
  if (g_tape == nullptr) {
    throw Error(Errc::kNotScalar, "backward without an active tape");
  }
  g_tape->backward(loss);
}

////////////////////////////////////////////////////////////////////////////////
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::axpy(1.0, b.data(), out);
  const bool track = tracking({&a, &b});
  Tensor y = make(a.shape(), std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_tape->record(yn, [an, bn, yn]() {
      if (an->requires_grad) {
        kernels::axpy(1.0, yn->grad, an->grad_buffer());
      }
      if (bn->requires_grad) {
        kernels::axpy(1.0, yn->grad, bn->grad_buffer());
      }
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::axpy(-1.0, b.data(), out);
  const bool track = tracking({&a, &b});
  Tensor y = make(a.shape(), std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_tape->record(yn, [an, bn, yn]() {
      if (an->requires_grad) {
        kernels::axpy(1.0, yn->grad, an->grad_buffer());
      }
      if (bn->requires_grad) {
        kernels::axpy(-1.0, yn->grad, bn->grad_buffer());
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::hadamard(b.data(), out);
  const bool track = tracking({&a, &b});
  Tensor y = make(a.shape(), std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_tape->record(yn, [an, bn, yn]() {
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& g = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += gy[i] * bn->data[i];
        }
      }
      if (bn->requires_grad) {
        auto& g = bn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += gy[i] * an->data[i];
        }
      }
    });
  }
  return y;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (b[i] == 0.0) {
      throw Error(Errc::kDomainError, "div by zero at index " + std::to_string(i));
    }
    out[i] = a[i] / b[i];
  }
  const bool track = tracking({&a, &b});
  Tensor y = make(a.shape(), std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_tape->record(yn, [an, bn, yn]() {
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& g = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += gy[i] / bn->data[i];
        }
      }
      if (bn->requires_grad) {
        auto& g = bn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] -= gy[i] * yn->data[i] / bn->data[i];
        }
      }
    });
  }
  return y;
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor exp(const Tensor& x) {
  return unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) {
      throw Error(Errc::kDomainError, "log of non-positive value at index " +
                                          std::to_string(i));
    }
  }
  return unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  return unary(
      x,
      [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)) + v * normal_pdf(v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
  return unary(x, softplus_value, [](double v, double) { return sigmoid_value(v); });
}

Tensor lgamma(const Tensor& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) {
      throw Error(Errc::kDomainError, "lgamma of non-positive value at index " +
                                          std::to_string(i));
    }
  }
  return unary(
      x, [](double v) { return std::lgamma(v); },
      [](double v, double) { return boost::math::digamma(v); });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size(), 0.0);
  kernels::axpy(factor, x.data(), out);
  const bool track = tracking({&x});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, factor]() {
      kernels::axpy(factor, yn->grad, xn->grad_buffer());
    });
  }
  return y;
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor map(const Tensor& x, std::function<double(double)> f,
           std::function<double(double)> df) {
  return unary(x, f, [df](double v, double) { return df(v); });
}

////////////////////////////////////////////////////////////////////////////////
// Trailing-axis broadcast

Tensor add_row(const Tensor& x, const Tensor& v) {
  const std::size_t n = last_dim(x);
  if (v.size() != n) {
    throw Error(Errc::kShapeMismatch, "add_row: " + shape_str(x.shape()) +
                                          " with " + shape_str(v.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const std::size_t m = x.size() / n;
  for (std::size_t r = 0; r < m; ++r) {
    kernels::axpy(1.0, v.data(), std::span<double>(out).subspan(r * n, n));
  }
  const bool track = tracking({&x, &v});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), vn = v.node(), yn = y.node();
    g_tape->record(yn, [xn, vn, yn, m, n]() {
      if (xn->requires_grad) {
        kernels::axpy(1.0, yn->grad, xn->grad_buffer());
      }
      if (vn->requires_grad) {
        auto& g = vn->grad_buffer();
        for (std::size_t r = 0; r < m; ++r) {
          kernels::axpy(1.0, std::span<const double>(yn->grad).subspan(r * n, n), g);
        }
      }
    });
  }
  return y;
}

Tensor mul_row(const Tensor& x, const Tensor& v) {
  const std::size_t n = last_dim(x);
  if (v.size() != n) {
    throw Error(Errc::kShapeMismatch, "mul_row: " + shape_str(x.shape()) +
                                          " with " + shape_str(v.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const std::size_t m = x.size() / n;
  for (std::size_t r = 0; r < m; ++r) {
    kernels::hadamard(v.data(), std::span<double>(out).subspan(r * n, n));
  }
  const bool track = tracking({&x, &v});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), vn = v.node(), yn = y.node();
    g_tape->record(yn, [xn, vn, yn, m, n]() {
      const auto& gy = yn->grad;
      if (xn->requires_grad) {
        auto& g = xn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += gy[i] * vn->data[i % n];
        }
      }
      if (vn->requires_grad) {
        auto& g = vn->grad_buffer();
        for (std::size_t i = 0; i < m * n; ++i) {
          g[i % n] += gy[i] * xn->data[i];
        }
      }
    });
  }
  return y;
}

////////////////////////////////////////////////////////////////////////////////
// Linear algebra and shape

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw Error(Errc::kShapeMismatch, "matmul: " + shape_str(a.shape()) + " x " +
                                          shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data());
  const bool track = tracking({&a, &b});
  Tensor y = make({m, n}, std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_tape->record(yn, [an, bn, yn, m, k, n]() {
      if (an->requires_grad) {
        // dA = dC * B^T
        kernels::gemm_nt(m, n, k, yn->grad.data(), bn->data.data(),
                         an->grad_buffer().data());
      }
      if (bn->requires_grad) {
        // dB = A^T * dC
        kernels::gemm_tn(k, m, n, an->data.data(), yn->grad.data(),
                         bn->grad_buffer().data());
      }
    });
  }
  return y;
}

Tensor transpose(const Tensor& x) {
  require_2d(x, "transpose");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[j * m + i] = x[i * n + j];
    }
  }
  const bool track = tracking({&x});
  Tensor y = make({n, m}, std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, m, n]() {
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          g[i * n + j] += yn->grad[j * m + i];
        }
      }
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw Error(Errc::kShapeMismatch, "reshape " + shape_str(x.shape()) + " to " +
                                          shape_str(shape));
  }
  const bool track = tracking({&x});
  Tensor y = make(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()),
                  track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn]() { kernels::axpy(1.0, yn->grad, xn->grad_buffer()); });
  }
  return y;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) {
    throw Error(Errc::kShapeMismatch, "concat of nothing");
  }
  for (const auto& p : parts) {
    require_2d(p, "concat");
  }
  if (axis > 1) {
    throw Error(Errc::kShapeMismatch, "concat axis must be 0 or 1");
  }
  const std::size_t other = 1 - axis;
  const std::size_t fixed = parts[0].shape()[other];
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape()[other] != fixed) {
      throw Error(Errc::kShapeMismatch, "concat: " + shape_str(parts[0].shape()) +
                                            " vs " + shape_str(p.shape()));
    }
    total += p.shape()[axis];
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t pr = p.shape()[0], pc = p.shape()[1];
    for (std::size_t i = 0; i < pr; ++i) {
      for (std::size_t j = 0; j < pc; ++j) {
        const std::size_t r = axis == 0 ? offset + i : i;
        const std::size_t c = axis == 0 ? j : offset + j;
        out[r * cols + c] = p[i * pc + j];
      }
    }
    offset += p.shape()[axis];
  }
  bool track = false;
  if (g_tape != nullptr) {
    track = std::any_of(parts.begin(), parts.end(),
                        [](const Tensor& p) { return p.requires_grad(); });
  }
  Tensor y = make({rows, cols}, std::move(out), track);
  if (track) {
    std::vector<NodePtr> nodes;
    for (const auto& p : parts) {
      nodes.push_back(p.node());
    }
    NodePtr yn = y.node();
    g_tape->record(yn, [nodes, offsets, yn, axis, cols]() {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto& pn = nodes[k];
        if (!pn->requires_grad) {
          continue;
        }
        auto& g = pn->grad_buffer();
        const std::size_t pr = pn->shape[0], pc = pn->shape[1];
        for (std::size_t i = 0; i < pr; ++i) {
          for (std::size_t j = 0; j < pc; ++j) {
            const std::size_t r = axis == 0 ? offsets[k] + i : i;
            const std::size_t c = axis == 0 ? j : offsets[k] + j;
            g[i * pc + j] += yn->grad[r * cols + c];
          }
        }
      }
    });
  }
  return y;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end) {
  require_2d(x, "slice");
  if (axis > 1 || begin > end || end > x.shape()[axis]) {
    throw Error(Errc::kShapeMismatch, "slice [" + std::to_string(begin) + ", " +
                                          std::to_string(end) + ") on axis " +
                                          std::to_string(axis) + " of " +
                                          shape_str(x.shape()));
  }
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  const std::size_t rows = axis == 0 ? end - begin : m;
  const std::size_t cols = axis == 0 ? n : end - begin;
  const std::size_t r0 = axis == 0 ? begin : 0;
  const std::size_t c0 = axis == 0 ? 0 : begin;
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(x.data().begin() + (r0 + i) * n + c0, cols, out.begin() + i * cols);
  }
  const bool track = tracking({&x});
  Tensor y = make({rows, cols}, std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, rows, cols, r0, c0, n]() {
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          g[(r0 + i) * n + c0 + j] += yn->grad[i * cols + j];
        }
      }
    });
  }
  return y;
}

Tensor embedding_lookup(const Tensor& table,
                        std::span<const std::int64_t> indices) {
  require_2d(table, "embedding_lookup");
  const std::size_t vocab = table.shape()[0], width = table.shape()[1];
  std::vector<double> out(indices.size() * width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= vocab) {
      throw Error(Errc::kDomainError, "embedding index " + std::to_string(indices[i]) +
                                          " outside [0, " + std::to_string(vocab) + ")");
    }
    std::copy_n(table.data().begin() + indices[i] * width, width,
                out.begin() + i * width);
  }
  const bool track = tracking({&table});
  Tensor y = make({indices.size(), width}, std::move(out), track);
  if (track) {
    NodePtr tn = table.node(), yn = y.node();
    std::vector<std::int64_t> idx(indices.begin(), indices.end());
    g_tape->record(yn, [tn, yn, idx, width]() {
      auto& g = tn->grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
          g[idx[i] * width + j] += yn->grad[i * width + j];
        }
      }
    });
  }
  return y;
}

Tensor repeat_rows(const Tensor& x, std::size_t rows) {
  const std::size_t n = x.size();
  if (x.dim() == 2 && x.shape()[0] != 1) {
    throw Error(Errc::kShapeMismatch, "repeat_rows needs a single row, got " +
                                          shape_str(x.shape()));
  }
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(x.data().begin(), x.data().end(), out.begin() + r * n);
  }
  const bool track = tracking({&x});
  Tensor y = make({rows, n}, std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, rows, n]() {
      auto& g = xn->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        kernels::axpy(1.0, std::span<const double>(yn->grad).subspan(r * n, n), g);
      }
    });
  }
  return y;
}

////////////////////////////////////////////////////////////////////////////////
// Reductions

Tensor sum(const Tensor& x) {
  const bool track = tracking({&x});
  Tensor y = make({1}, {kernels::sum(x.data())}, track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn]() {
      auto& g = xn->grad_buffer();
      const double gy = yn->grad[0];
      for (double& v : g) {
        v += gy;
      }
    });
  }
  return y;
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum(const Tensor& x, std::size_t axis) {
  require_2d(x, "sum(axis)");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (axis > 1) {
    throw Error(Errc::kShapeMismatch, "sum axis must be 0 or 1");
  }
  std::vector<double> out(axis == 0 ? n : m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[axis == 0 ? j : i] += x[i * n + j];
    }
  }
  const bool track = tracking({&x});
  Tensor y = make(axis == 0 ? Shape{1, n} : Shape{m, 1}, std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, m, n, axis]() {
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          g[i * n + j] += yn->grad[axis == 0 ? j : i];
        }
      }
    });
  }
  return y;
}

Tensor mean(const Tensor& x, std::size_t axis) {
  require_2d(x, "mean(axis)");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.shape()[axis]));
}

////////////////////////////////////////////////////////////////////////////////
// Neural-network blocks

Tensor softmax(const Tensor& x, std::size_t axis) {
  std::size_t m, n;
  if (x.dim() == 1) {
    m = 1;
    n = x.size();
    axis = 1;
  } else {
    require_2d(x, "softmax");
    m = x.shape()[0];
    n = x.shape()[1];
  }
  if (axis > 1) {
    throw Error(Errc::kShapeMismatch, "softmax axis must be 0 or 1");
  }
  // View the reduction as `lines` independent vectors of `len` entries.
  const std::size_t lines = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  auto index = [=](std::size_t line, std::size_t k) {
    return axis == 1 ? line * n + k : k * n + line;
  };
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t l = 0; l < lines; ++l) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) {
      mx = std::max(mx, in[index(l, k)]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(in[index(l, k)] - mx);
      out[index(l, k)] = e;
      total += e;
    }
    for (std::size_t k = 0; k < len; ++k) {
      out[index(l, k)] /= total;
    }
  }
  const bool track = tracking({&x});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, lines, len, index]() {
      auto& g = xn->grad_buffer();
      const auto& gy = yn->grad;
      const auto& yv = yn->data;
      for (std::size_t l = 0; l < lines; ++l) {
        double dotp = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
          dotp += gy[index(l, k)] * yv[index(l, k)];
        }
        for (std::size_t k = 0; k < len; ++k) {
          g[index(l, k)] += yv[index(l, k)] * (gy[index(l, k)] - dotp);
        }
      }
    });
  }
  return y;
}

Tensor causal_mask(const Tensor& x) {
  require_2d(x, "causal_mask");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out[i * n + j] = -std::numeric_limits<double>::infinity();
    }
  }
  const bool track = tracking({&x});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_tape->record(yn, [xn, yn, m, n]() {
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i && j < n; ++j) {
          g[i * n + j] += yn->grad[i * n + j];
        }
      }
    });
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon) {
  const std::size_t n = last_dim(x);
  if (gain.size() != n || bias.size() != n) {
    throw Error(Errc::kShapeMismatch, "layer_norm: input " + shape_str(x.shape()) +
                                          ", gain " + shape_str(gain.shape()) +
                                          ", bias " + shape_str(bias.shape()));
  }
  const std::size_t m = x.size() / n;
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(m);
  const auto in = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const auto row = in.subspan(r * n, n);
    const double mu = kernels::sum(row) / static_cast<double>(n);
    double var = 0.0;
    for (double v : row) {
      var += (v - mu) * (v - mu);
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + epsilon);
    inv_std[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[r * n + j] = h;
      out[r * n + j] = gain[j] * h + bias[j];
    }
  }
  const bool track = tracking({&x, &gain, &bias});
  Tensor y = make(x.shape(), std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), gn = gain.node(), bn = bias.node(), yn = y.node();
    g_tape->record(yn, [xn, gn, bn, yn, xhat = std::move(xhat),
                        inv_std = std::move(inv_std), m, n]() {
      const auto& gy = yn->grad;
      if (gn->requires_grad) {
        auto& g = gn->grad_buffer();
        for (std::size_t i = 0; i < m * n; ++i) {
          g[i % n] += gy[i] * xhat[i];
        }
      }
      if (bn->requires_grad) {
        auto& g = bn->grad_buffer();
        for (std::size_t i = 0; i < m * n; ++i) {
          g[i % n] += gy[i];
        }
      }
      if (xn->requires_grad) {
        auto& g = xn->grad_buffer();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < m; ++r) {
          double mean_d = 0.0, mean_dh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = gy[r * n + j] * gn->data[j];
            mean_d += d;
            mean_dh += d * xhat[r * n + j];
          }
          mean_d *= inv_n;
          mean_dh *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = gy[r * n + j] * gn->data[j];
            g[r * n + j] += inv_std[r] * (d - mean_d - xhat[r * n + j] * mean_dh);
          }
        }
      }
    });
  }
  return y;
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) {
    return x;
  }
  if (p >= 1.0) {
    throw Error(Errc::kDomainError, "dropout probability must be < 1");
  }
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(x.size());
  const double factor = 1.0 / (1.0 - p);
  for (double& v : mask) {
    v = keep(rng) ? factor : 0.0;
  }
  return mul(x, Tensor(x.shape(), std::move(mask), false));
}

////////////////////////////////////////////////////////////////////////////////
// Gradient checking

namespace {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

} // namespace

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double step, double tolerance) {
  Tensor leaf(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
  std::vector<Tensor> leaves{leaf};
  return grad_check_params([&]() { return f(leaf); }, leaves, step, tolerance);
}

GradCheckReport grad_check_params(const std::function<Tensor()>& loss,
                                  std::vector<Tensor>& leaves, double step,
                                  double tolerance) {
  for (auto& t : leaves) {
    t.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor value = loss();
    tape.backward(value);
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  NoGradScope no_grad;
  std::size_t flat = 0;
  for (auto& t : leaves) {
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) {
      std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    }
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i, ++flat) {
      const double original = values[i];
      auto at = [&](double offset) {
        values[i] = original + offset;
        return loss().item();
      };
      // Fourth-order central difference.
      const double numeric =
          (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
      values[i] = original;
      const double err = relative_error(analytic[i], numeric);
      if (!(err <= report.max_relative_error)) {
        report.max_relative_error = err;
        report.worst_index = flat;
      }
      ++report.checked;
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

} // namespace coldstart::ad
