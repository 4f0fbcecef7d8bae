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

#include <doctest.h>

#include <vector>

#include "test_helpers.hpp"
#include "vip/autograd.hpp"
#include "vip/error.hpp"

namespace vip {
namespace {

using testing::MaxRelError;
using testing::NumericGrad;
using testing::RandomMatrix;

// Weighted sum of op(x) with fixed random weights, checked against central
// differences.
void CheckUnary(const std::function<ad::Var(ad::Var)>& op, const Matrix& x, double tol = 1e-6) {
  Matrix weights;
  {
    ad::Tape tape;
    const ad::Var y = op(tape.constant(x));
    Rng rng(7);
    weights = RandomMatrix(rng, y.rows(), y.cols());
  }
  auto loss = [&](const Matrix& in) {
    ad::Tape tape;
    return (op(tape.constant(in)).value().array() * weights.array()).sum();
  };

  ad::Tape tape;
  ad::Var in = tape.parameter(x);
  ad::Var y = op(in);
  ad::Var w = tape.constant(weights);
  std::vector<ad::Var> rows;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    rows.push_back(ad::matmul_nt(ad::slice_rows(y, r, 1), ad::slice_rows(w, r, 1)));
  }
  tape.backward(ad::sum(ad::concat_rows(rows)));
  CHECK(MaxRelError(in.grad(), NumericGrad(loss, x)) < tol);
}

TEST_CASE("elementwise and reduction ops match finite differences") {
  Rng rng(1);
  const Matrix x = RandomMatrix(rng, 3, 5);
  CheckUnary([](ad::Var a) { return ad::exp(a); }, x);
  CheckUnary([](ad::Var a) { return ad::tanh(a); }, x);
  CheckUnary([](ad::Var a) { return ad::scale(a, -2.5); }, x);
  CheckUnary([](ad::Var a) { return ad::softmax_rows(a); }, x);
  CheckUnary([](ad::Var a) { return ad::layer_norm_rows(a); }, x, 1e-5);
  CheckUnary([](ad::Var a) { return ad::l2_normalize_rows(a); }, x);
  CheckUnary([](ad::Var a) { return ad::mean_rows(a); }, x);
  CheckUnary([](ad::Var a) { return ad::max_per_row(a); }, x);
  CheckUnary([](ad::Var a) { return ad::slice_rows(a, 1, 2); }, x);
  CheckUnary([](ad::Var a) { return ad::slice_cols(a, 2, 3); }, x);
  CheckUnary([](ad::Var a) { return ad::matmul_nt(a, a); }, x);
  CheckUnary([](ad::Var a) { return ad::add(a, a); }, x);
}

TEST_CASE("binary ops route gradients to both operands") {
  Rng rng(2);
  const Matrix a0 = RandomMatrix(rng, 3, 4);
  const Matrix b0 = RandomMatrix(rng, 4, 2);
  const Matrix row0 = RandomMatrix(rng, 1, 4);
  const Matrix frozen = RandomMatrix(rng, 4, 3);

  CheckUnary([&](ad::Var a) { return ad::matmul(a, a.tape()->constant(b0)); }, a0);
  CheckUnary([&](ad::Var b) { return ad::matmul(b.tape()->constant(a0), b); }, b0);
  CheckUnary([&](ad::Var a) { return ad::matmul(a, frozen); }, a0);
  CheckUnary([&](ad::Var a) { return ad::add_row(a, a.tape()->constant(row0)); }, a0);
  CheckUnary([&](ad::Var r) { return ad::add_row(r.tape()->constant(a0), r); }, row0);
  CheckUnary(
      [&](ad::Var a) {
        const ad::Var parts[] = {a, ad::scale(a, 3.0)};
        return ad::concat_cols(parts);
      },
      a0);
  CheckUnary(
      [&](ad::Var a) {
        return ad::scale_by(a, ad::sum(ad::slice_cols(ad::slice_rows(a, 0, 1), 0, 1)));
      },
      a0);
}

TEST_CASE("softmax cross-entropy gradient and stability") {
  Rng rng(3);
  const Matrix logits = RandomMatrix(rng, 4, 3, 2.0);
  const std::vector<int> targets = {0, 2, 1, 2};
  auto loss = [&](const Matrix& z) {
    ad::Tape tape;
    return ad::softmax_cross_entropy(tape.constant(z), targets).scalar();
  };
  ad::Tape tape;
  ad::Var z = tape.parameter(logits);
  tape.backward(ad::softmax_cross_entropy(z, targets));
  CHECK(MaxRelError(z.grad(), NumericGrad(loss, logits)) < 1e-6);

  Matrix saturated(1, 2);
  saturated << 100.0, -100.0;
  const std::vector<int> first = {0};
  ad::Tape t2;
  const double value = ad::softmax_cross_entropy(t2.constant(saturated), first).scalar();
  CHECK(std::isfinite(value));
  CHECK(value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across shared uses") {
  ad::Tape tape;
  Matrix one(1, 1);
  one << 3.0;
  ad::Var x = tape.parameter(one);
  ad::Var y = ad::add(ad::scale(x, 2.0), ad::scale_by(x, x));  // 2x + x^2
  tape.backward(y);
  CHECK(x.grad()(0, 0) == doctest::Approx(8.0));
}

TEST_CASE("constants receive no gradient") {
  ad::Tape tape;
  Matrix v = Matrix::Ones(2, 2);
  ad::Var c = tape.constant(v);
  ad::Var p = tape.parameter(v);
  tape.backward(ad::sum(ad::matmul(c, p)));
  CHECK_FALSE(c.requires_grad());
  CHECK(c.grad().isZero());
  CHECK_FALSE(p.grad().isZero());
}

TEST_CASE("shape mismatches and degenerate rows raise") {
  ad::Tape tape;
  ad::Var a = tape.parameter(Matrix::Ones(2, 3));
  ad::Var b = tape.parameter(Matrix::Ones(2, 3));
  CHECK_THROWS_AS(ad::matmul(a, b), InvalidArgument);
  CHECK_THROWS_AS(ad::add(a, tape.constant(Matrix::Ones(3, 3))), InvalidArgument);
  CHECK_THROWS_AS(ad::slice_rows(a, 1, 5), InvalidArgument);
  CHECK_THROWS_AS(ad::l2_normalize_rows(tape.constant(Matrix::Zero(1, 3))), DegenerateFeature);
  CHECK_THROWS_AS(tape.backward(a), InvalidArgument);
}

}  // namespace
}  // namespace vip
