// Copyright 2026 The ViP Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vip {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

}  // namespace vip

namespace vip::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient accumulated by the last Tape::backward; zeros if none reached.
  Matrix grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Wengert list for reverse-mode differentiation over dense matrices.
///
/// Nodes are appended in evaluation order, so a single reverse sweep visits
/// every node after all of its consumers. Nodes whose inputs are all
/// constants never get a backward closure.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  /// Records an op result. `backward` runs only when some input requires grad.
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and sweeps the tape.
  void backward(Var out);

  void accumulate(Var v, const Matrix& g);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  Matrix grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Ops. All shapes are checked; mismatches raise InvalidArgument.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
/// Product with a frozen weight held by reference; `w` must outlive backward().
Var matmul(Var a, const Matrix& w);
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1xC row over every row of a
Var scale(Var a, double s);
Var scale_by(Var a, Var s);  // s is 1x1
Var exp(Var a);
Var tanh(Var a);
Var softmax_rows(Var a);
Var layer_norm_rows(Var a, double eps = 1e-5);
/// Row-wise L2 normalization; a zero row raises DegenerateFeature.
Var l2_normalize_rows(Var a);
Var mean_rows(Var a);  // 1xC column means
Var sum(Var a);        // 1x1
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Bx1 row maxima; the gradient is routed to the first arg-max of each row.
Var max_per_row(Var a);
/// Mean softmax cross-entropy of BxN logits against target class indices,
/// evaluated through a max-shifted log-sum-exp.
Var softmax_cross_entropy(Var logits, std::span<const int> targets);

}  // namespace vip::ad
