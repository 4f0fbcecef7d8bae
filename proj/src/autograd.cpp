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

#include "vip/autograd.hpp"

#include <cmath>
#include <string>

#include "vip/error.hpp"

namespace vip::ad {

namespace {

Tape& TapeOf(Var v) {
  if (v.tape() == nullptr) throw InvalidArgument("autograd: unbound variable");
  return *v.tape();
}

void RequireSameTape(Var a, Var b) {
  if (a.tape() != b.tape()) throw InvalidArgument("autograd: variables from different tapes");
}

std::string Shape(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void RequireShape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw InvalidArgument(std::string("autograd: shape mismatch in ") + op + ": " + Shape(a) +
                          " vs " + Shape(b));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
Matrix Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw InvalidArgument("autograd: scalar() on non-scalar " + Shape(v));
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw InvalidArgument("autograd: input recorded on another tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Matrix Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw InternalInvariant("autograd: gradient shape " + Shape(g) + " for value " +
                            Shape(n.value));
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var out) {
  if (out.tape() != this) throw InvalidArgument("autograd: backward on foreign variable");
  if (nodes_[out.id()].value.size() != 1) {
    throw InvalidArgument("autograd: backward needs a scalar output");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  nodes_[out.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = out.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

Var matmul(Var a, Var b) {
  RequireSameTape(a, b);
  RequireShape(a.cols() == b.rows(), "matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  const Var in[] = {a, b};
  return TapeOf(a).record(std::move(out), in, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  RequireSameTape(a, b);
  RequireShape(a.cols() == b.cols(), "matmul_nt", a.value(), b.value());
  Matrix out = a.value() * b.value().transpose();
  const Var in[] = {a, b};
  return TapeOf(a).record(std::move(out), in, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value());
    if (b.requires_grad()) t.accumulate(b, g.transpose() * a.value());
  });
}

Var matmul(Var a, const Matrix& w) {
  RequireShape(a.cols() == w.rows(), "matmul", a.value(), w);
  Matrix out = a.value() * w;
  const Var in[] = {a};
  const Matrix* weight = &w;
  return TapeOf(a).record(std::move(out), in, [a, weight](Tape& t, const Matrix& g) {
    t.accumulate(a, g * weight->transpose());
  });
}

Var add(Var a, Var b) {
  RequireSameTape(a, b);
  RequireShape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a.value(), b.value());
  Matrix out = a.value() + b.value();
  const Var in[] = {a, b};
  return TapeOf(a).record(std::move(out), in, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(Var a, Var row) {
  RequireSameTape(a, row);
  RequireShape(row.rows() == 1 && row.cols() == a.cols(), "add_row", a.value(), row.value());
  Matrix out = a.value().rowwise() + row.value().row(0);
  const Var in[] = {a, row};
  return TapeOf(a).record(std::move(out), in, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (row.requires_grad()) t.accumulate(row, g.colwise().sum());
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value() * s;
  const Var in[] = {a};
  return TapeOf(a).record(std::move(out), in,
                          [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var scale_by(Var a, Var s) {
  RequireSameTape(a, s);
  if (s.value().size() != 1) throw InvalidArgument("autograd: scale_by needs a 1x1 scale");
  Matrix out = a.value() * s.scalar();
  const Var in[] = {a, s};
  return TapeOf(a).record(std::move(out), in, [a, s](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * s.scalar());
    if (s.requires_grad()) {
      Matrix gs(1, 1);
      gs(0, 0) = g.cwiseProduct(a.value()).sum();
      t.accumulate(s, gs);
    }
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  const Var in[] = {a};
  Tape& tape = TapeOf(a);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [a, self](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(self)));
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  const Var in[] = {a};
  Tape& tape = TapeOf(a);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  const Var in[] = {a};
  Tape& tape = TapeOf(a);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r) = y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
    }
    t.accumulate(a, dx);
  });
}

Var layer_norm_rows(Var a, double eps) {
  const Matrix& x = a.value();
  const Eigen::Index n = x.cols();
  Matrix out(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const auto centered = (x.row(r).array() - mu).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(n);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    out.row(r) = centered * inv_std(r);
  }
  const Var in[] = {a};
  Tape& tape = TapeOf(a);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [a, self, inv_std, n](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double mean_g = g.row(r).sum() / static_cast<double>(n);
      const double mean_gy = g.row(r).dot(y.row(r)) / static_cast<double>(n);
      dx.row(r) = inv_std(r) * ((g.row(r).array() - mean_g) - y.row(r).array() * mean_gy).matrix();
    }
    t.accumulate(a, dx);
  });
}

Var l2_normalize_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  Eigen::VectorXd norms(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    norms(r) = x.row(r).norm();
    if (!(norms(r) > 0.0) || !std::isfinite(norms(r))) {
      throw DegenerateFeature("cannot normalize a zero-norm or non-finite vector");
    }
    out.row(r) = x.row(r) / norms(r);
  }
  const Var in[] = {a};
  Tape& tape = TapeOf(a);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [a, self, norms](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      dx.row(r) = (g.row(r) - y.row(r) * g.row(r).dot(y.row(r))) / norms(r);
    }
    t.accumulate(a, dx);
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw InvalidArgument("autograd: mean over zero rows");
  Matrix out = a.value().colwise().mean();
  const Var in[] = {a};
  const Eigen::Index rows = a.rows();
  return TapeOf(a).record(std::move(out), in, [a, rows](Tape& t, const Matrix& g) {
    Matrix dx = g.replicate(rows, 1) / static_cast<double>(rows);
    t.accumulate(a, dx);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Var in[] = {a};
  return TapeOf(a).record(std::move(out), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("autograd: concat_rows of nothing");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const Var& p : parts) {
    RequireSameTape(parts.front(), p);
    RequireShape(p.cols() == cols, "concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return TapeOf(parts.front()).record(std::move(out), parts, [saved](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const Var& p : saved) {
      if (p.requires_grad()) t.accumulate(p, g.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("autograd: concat_cols of nothing");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const Var& p : parts) {
    RequireSameTape(parts.front(), p);
    RequireShape(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return TapeOf(parts.front()).record(std::move(out), parts, [saved](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const Var& p : saved) {
      if (p.requires_grad()) t.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw InvalidArgument("autograd: slice_rows out of range");
  }
  Matrix out = a.value().middleRows(start, count);
  const Var in[] = {a};
  return TapeOf(a).record(std::move(out), in, [a, start, count](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(a.rows(), a.cols());
    dx.middleRows(start, count) = g;
    t.accumulate(a, dx);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw InvalidArgument("autograd: slice_cols out of range");
  }
  Matrix out = a.value().middleCols(start, count);
  const Var in[] = {a};
  return TapeOf(a).record(std::move(out), in, [a, start, count](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(a.rows(), a.cols());
    dx.middleCols(start, count) = g;
    t.accumulate(a, dx);
  });
}

Var max_per_row(Var a) {
  if (a.cols() == 0) throw InvalidArgument("autograd: max over zero columns");
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < x.cols(); ++c) {
      if (x(r, c) > x(r, best)) best = c;
    }
    arg[static_cast<std::size_t>(r)] = best;
    out(r, 0) = x(r, best);
  }
  const Var in[] = {a};
  return TapeOf(a).record(std::move(out), in, [a, arg](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) dx(r, arg[static_cast<std::size_t>(r)]) = g(r, 0);
    t.accumulate(a, dx);
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets) {
  const Matrix& z = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != z.rows() || z.rows() == 0) {
    throw InvalidArgument("autograd: cross-entropy needs one target per logit row");
  }
  Matrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int y = targets[static_cast<std::size_t>(r)];
    if (y < 0 || y >= z.cols()) throw InvalidArgument("autograd: cross-entropy target out of range");
    const double m = z.row(r).maxCoeff();
    const auto shifted = (z.row(r).array() - m).exp();
    const double denom = shifted.sum();
    probs.row(r) = (shifted / denom).matrix();
    total += std::log(denom) - (z(r, y) - m);
  }
  const double batch = static_cast<double>(z.rows());
  Matrix out(1, 1);
  out(0, 0) = total / batch;
  std::vector<int> saved(targets.begin(), targets.end());
  const Var in[] = {logits};
  return TapeOf(logits).record(
      std::move(out), in, [logits, probs, saved, batch](Tape& t, const Matrix& g) {
        Matrix dz = probs;
        for (std::size_t r = 0; r < saved.size(); ++r) {
          dz(static_cast<Eigen::Index>(r), saved[r]) -= 1.0;
        }
        t.accumulate(logits, dz * (g(0, 0) / batch));
      });
}

}  // namespace vip::ad
