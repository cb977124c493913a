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

#pragma once

// Dense row-major float64 tensors with tape-based reverse-mode autodiff.
//
// Operations record a backward rule on the thread's active Tape whenever at
// least one input requires a gradient. Without an active tape (inference)
// nothing is recorded and the ops are plain array arithmetic.
//
// Broadcasting is limited to trailing-axis vectors (add_row, mul_row and the
// layer-norm affine); everything else requires identical shapes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace coldstart::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad; // empty until a gradient flows in
  bool requires_grad = false;

  void accumulate(std::size_t i, double g);
  std::vector<double>& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  /// Direct write access; only for leaves (parameter updates, test setup).
  std::span<double> mutable_data() { return node_->data; }
  double operator[](std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient, or an empty span when none has flowed in.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Copy of the values with no gradient tracking.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of executed differentiable operations.
class Tape {
 public:
  using Backward = std::function<void()>;

  void record(std::shared_ptr<Node> output, Backward backward);
  /// Populates grads of every requires-grad tensor reachable from `loss`.
  void backward(const Tensor& loss);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::shared_ptr<Node> output;
    Backward backward;
  };
  std::vector<Entry> entries_;
};

/// Installs a tape as the thread's active tape for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Disables recording for the scope's lifetime (inference, finite differences).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Runs backward on the active tape. Throws NotScalar for non-scalar loss.
void backward(const Tensor& loss);

// Elementwise (identical shapes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor lgamma(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
/// Elementwise f with user-supplied derivative df.
Tensor map(const Tensor& x, std::function<double(double)> f,
           std::function<double(double)> df);

// Trailing-axis broadcast: x[..., n] op v[n].
Tensor add_row(const Tensor& x, const Tensor& v);
Tensor mul_row(const Tensor& x, const Tensor& v);

// Linear algebra and shape (2-D unless noted).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end);
/// Rows of table[V, E] at indices, as [indices.size(), E].
Tensor embedding_lookup(const Tensor& table,
                        std::span<const std::int64_t> indices);
/// x[1, n] repeated to [rows, n].
Tensor repeat_rows(const Tensor& x, std::size_t rows);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// 2-D reduction keeping dims: axis 0 -> [1, n], axis 1 -> [m, 1].
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);

// Neural-network building blocks (2-D).
Tensor softmax(const Tensor& x, std::size_t axis = 1);
/// Sets entries above the diagonal to -inf.
Tensor causal_mask(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon = 1e-5);
/// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Fourth-order central finite differences of a scalar function against its
/// analytic gradient. Relative error uses a max(|a|, |b|, 1e-8) denominator.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double step = 1e-5,
                           double tolerance = 1e-4);

/// Same check over every element of a set of leaf tensors that `loss` reads.
/// The leaves are perturbed in place and restored.
GradCheckReport grad_check_params(const std::function<Tensor()>& loss,
                                  std::vector<Tensor>& leaves,
                                  double step = 1e-5, double tolerance = 1e-4);

} // namespace coldstart::ad
