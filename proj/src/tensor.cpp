/* Copyright 2026 The Disent Authors. All Rights Reserved.

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

#include "disent/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "disent/linalg.hpp"

namespace disent {

std::string Shape::str() const {
  std::ostringstream os;
  switch (rank) {
    case 0:
      os << "[scalar]";
      break;
    case 1:
      os << "[" << d0 << "]";
      break;
    default:
      os << "[" << d0 << "x" << d1 << "]";
  }
  return os.str();
}

const Shape& Tensor::shape() const { return tape_->node(idx_).shape; }

std::span<const double> Tensor::value() const {
  const auto& v = tape_->node(idx_).val;
  return {v.data(), v.size()};
}

std::span<const double> Tensor::grad() const {
  const auto& g = tape_->node(idx_).grad;
  return {g.data(), g.size()};
}

bool Tensor::requires_grad() const { return tape_->node(idx_).requires_grad; }

double Tensor::scalar() const {
  if (size() != 1)
    throw ContractError("scalar() on tensor of shape " + shape().str());
  return value()[0];
}

namespace {

void check_finite(const char* op, const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NonFiniteError(std::string(op) + ": non-finite value produced");
    }
  }
}

}  // namespace

std::uint32_t Tape::push(Shape s, std::vector<double> v, bool req,
                         std::function<void(Tape&)> back, const char* op) {
  if (s.numel() != v.size())
    throw DimensionError(std::string(op) + ": shape " + s.str() +
                         " does not match data length " +
                         std::to_string(v.size()));
  check_finite(op, v);
  Node n;
  n.shape = s;
  n.val = std::move(v);
  n.grad.assign(n.val.size(), 0.0);
  n.back = std::move(back);
  n.requires_grad = req;
  nodes_.push_back(std::move(n));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void Tape::check_owned(Tensor t) const {
  if (t.tape_ != this)
    throw ContractError("tensor does not belong to this tape");
}

void Tape::check_same_shape(const char* op, Tensor a, Tensor b) const {
  check_owned(a);
  check_owned(b);
  if (!(a.shape() == b.shape()))
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape().str() + " vs " + b.shape().str());
}

Tensor Tape::leaf(const Array& a) {
  if (a.grad.size() != a.value.size()) a.grad.assign(a.value.size(), 0.0);
  std::uint32_t idx = push(a.shape, a.value, true, nullptr, "leaf");
  nodes_[idx].bound = &a;
  std::uint32_t self = idx;
  nodes_[idx].back = [self](Tape& t) {
    Node& me = t.nodes_[self];
    for (std::size_t k = 0; k < me.grad.size(); ++k)
      me.bound->grad[k] += me.grad[k];
  };
  return Tensor(this, idx);
}

Tensor Tape::constant(Shape s, std::vector<double> v) {
  return Tensor(this, push(s, std::move(v), false, nullptr, "constant"));
}

Tensor Tape::constant(double v) { return constant(Shape::scalar(), {v}); }

Tensor Tape::constant_vector(std::vector<double> v) {
  std::size_t n = v.size();
  return constant(Shape::vector(n), std::move(v));
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Tensor Tape::add(Tensor a, Tensor b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.size());
  auto av = a.value(), bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  std::uint32_t ia = a.idx_, ib = b.idx_;
  bool req = a.requires_grad() || b.requires_grad();
  std::uint32_t idx = push(a.shape(), std::move(out), req, nullptr, "add");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, ib](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] != 0.0) {
        t.accumulate(ia, k, g[k]);
        t.accumulate(ib, k, g[k]);
      }
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::sub(Tensor a, Tensor b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  auto av = a.value(), bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  std::uint32_t ia = a.idx_, ib = b.idx_;
  bool req = a.requires_grad() || b.requires_grad();
  std::uint32_t idx = push(a.shape(), std::move(out), req, nullptr, "sub");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, ib](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] != 0.0) {
        t.accumulate(ia, k, g[k]);
        t.accumulate(ib, k, -g[k]);
      }
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::mul(Tensor a, Tensor b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  auto av = a.value(), bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  std::uint32_t ia = a.idx_, ib = b.idx_;
  bool req = a.requires_grad() || b.requires_grad();
  std::uint32_t idx = push(a.shape(), std::move(out), req, nullptr, "mul");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, ib](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av2 = t.nodes_[ia].val;
    const auto& bv2 = t.nodes_[ib].val;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] != 0.0) {
        t.accumulate(ia, k, g[k] * bv2[k]);
        t.accumulate(ib, k, g[k] * av2[k]);
      }
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::neg(Tensor a) { return scale(a, -1.0); }

Tensor Tape::scale(Tensor a, double c) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "scale");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g[k] != 0.0) t.accumulate(ia, k, g[k] * c);
  };
  return Tensor(this, idx);
}

Tensor Tape::add_scalar(Tensor a, double c) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "add_scalar");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g[k] != 0.0) t.accumulate(ia, k, g[k]);
  };
  return Tensor(this, idx);
}

Tensor Tape::exp(Tensor a) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "exp");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia](Tape& t) {
    const auto& me = t.nodes_[self];
    for (std::size_t k = 0; k < me.grad.size(); ++k)
      if (me.grad[k] != 0.0) t.accumulate(ia, k, me.grad[k] * me.val[k]);
  };
  return Tensor(this, idx);
}

Tensor Tape::log(Tensor a) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (av[i] <= 0.0) throw ContractError("log: non-positive input");
    out[i] = std::log(av[i]);
  }
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "log");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av2 = t.nodes_[ia].val;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g[k] != 0.0) t.accumulate(ia, k, g[k] / av2[k]);
  };
  return Tensor(this, idx);
}

Tensor Tape::tanh(Tensor a) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "tanh");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia](Tape& t) {
    const auto& me = t.nodes_[self];
    for (std::size_t k = 0; k < me.grad.size(); ++k)
      if (me.grad[k] != 0.0)
        t.accumulate(ia, k, me.grad[k] * (1.0 - me.val[k] * me.val[k]));
  };
  return Tensor(this, idx);
}

namespace {
double softplus_fwd(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor Tape::softplus(Tensor a) {
  check_owned(a);
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_fwd(av[i]);
  std::uint32_t ia = a.idx_;
  std::uint32_t idx =
      push(a.shape(), std::move(out), a.requires_grad(), nullptr, "softplus");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av2 = t.nodes_[ia].val;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g[k] != 0.0) t.accumulate(ia, k, g[k] * sigmoid(av2[k]));
  };
  return Tensor(this, idx);
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Tensor Tape::matmul(Tensor a, Tensor b) {
  check_owned(a);
  check_owned(b);
  if (a.shape().rank != 2 || b.shape().rank != 2 ||
      a.shape().cols() != b.shape().rows())
    throw DimensionError("matmul: incompatible shapes " + a.shape().str() +
                         " vs " + b.shape().str());
  const std::size_t m = a.shape().rows(), k = a.shape().cols(),
                    n = b.shape().cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.value(), bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  std::uint32_t ia = a.idx_, ib = b.idx_;
  bool req = a.requires_grad() || b.requires_grad();
  std::uint32_t idx =
      push(Shape::matrix(m, n), std::move(out), req, nullptr, "matmul");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, ib, m, k, n](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av2 = t.nodes_[ia].val;
    const auto& bv2 = t.nodes_[ib].val;
    // dA = G B^T ; dB = A^T G
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        for (std::size_t p = 0; p < k; ++p) {
          t.accumulate(ia, i * k + p, gij * bv2[p * n + j]);
          t.accumulate(ib, p * n + j, gij * av2[i * k + p]);
        }
      }
  };
  return Tensor(this, idx);
}

Tensor Tape::matvec(Tensor m, Tensor v) {
  check_owned(m);
  check_owned(v);
  if (m.shape().rank != 2 || v.shape().rank != 1 ||
      m.shape().cols() != v.shape().d0)
    throw DimensionError("matvec: incompatible shapes " + m.shape().str() +
                         " vs " + v.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  std::vector<double> out(r, 0.0);
  auto mv = m.value(), vv = v.value();
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += mv[i * c + j] * vv[j];
    out[i] = s;
  }
  std::uint32_t im = m.idx_, iv = v.idx_;
  bool req = m.requires_grad() || v.requires_grad();
  std::uint32_t idx =
      push(Shape::vector(r), std::move(out), req, nullptr, "matvec");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, iv, r, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& mv2 = t.nodes_[im].val;
    const auto& vv2 = t.nodes_[iv].val;
    for (std::size_t i = 0; i < r; ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      for (std::size_t j = 0; j < c; ++j) {
        t.accumulate(im, i * c + j, gi * vv2[j]);
        t.accumulate(iv, j, gi * mv2[i * c + j]);
      }
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::dot(Tensor a, Tensor b) {
  check_owned(a);
  check_owned(b);
  if (a.shape().rank != 1 || b.shape().rank != 1 ||
      a.shape().d0 != b.shape().d0)
    throw DimensionError("dot: incompatible shapes " + a.shape().str() +
                         " vs " + b.shape().str());
  double s = 0.0;
  auto av = a.value(), bv = b.value();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  std::uint32_t ia = a.idx_, ib = b.idx_;
  bool req = a.requires_grad() || b.requires_grad();
  std::uint32_t idx = push(Shape::scalar(), {s}, req, nullptr, "dot");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, ib](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    if (g == 0.0) return;
    const auto& av2 = t.nodes_[ia].val;
    const auto& bv2 = t.nodes_[ib].val;
    for (std::size_t k = 0; k < av2.size(); ++k) {
      t.accumulate(ia, k, g * bv2[k]);
      t.accumulate(ib, k, g * av2[k]);
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::transpose(Tensor m) {
  check_owned(m);
  if (m.shape().rank != 2)
    throw DimensionError("transpose: need matrix, got " + m.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  std::vector<double> out(r * c);
  auto mv = m.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = mv[i * c + j];
  std::uint32_t im = m.idx_;
  std::uint32_t idx = push(Shape::matrix(c, r), std::move(out),
                           m.requires_grad(), nullptr, "transpose");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, r, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t i = 0; i < r; ++i) {
        const double gv = g[j * r + i];
        if (gv != 0.0) t.accumulate(im, i * c + j, gv);
      }
  };
  return Tensor(this, idx);
}

Tensor Tape::trace(Tensor m) {
  check_owned(m);
  if (m.shape().rank != 2 || m.shape().rows() != m.shape().cols())
    throw DimensionError("trace: need square matrix, got " + m.shape().str());
  const std::size_t n = m.shape().rows();
  double s = 0.0;
  auto mv = m.value();
  for (std::size_t i = 0; i < n; ++i) s += mv[i * n + i];
  std::uint32_t im = m.idx_;
  std::uint32_t idx =
      push(Shape::scalar(), {s}, m.requires_grad(), nullptr, "trace");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, n](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    if (g == 0.0) return;
    for (std::size_t i = 0; i < n; ++i) t.accumulate(im, i * n + i, g);
  };
  return Tensor(this, idx);
}

Tensor Tape::logdet_spd(Tensor m) {
  check_owned(m);
  if (m.shape().rank != 2 || m.shape().rows() != m.shape().cols())
    throw DimensionError("logdet_spd: need square matrix, got " +
                         m.shape().str());
  const std::size_t n = m.shape().rows();
  auto mv = m.value();
  // Work on the symmetric part so the derivative with respect to every
  // entry (not just the lower triangle) is well defined.
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i * n + j] = 0.5 * (mv[i * n + j] + mv[j * n + i]);
  std::vector<double> chol;
  if (!la::cholesky_lower(a, n, chol))
    throw ContractError("logdet_spd: matrix is not positive definite");
  double ld = 0.0;
  for (std::size_t i = 0; i < n; ++i) ld += std::log(chol[i * n + i]);
  ld *= 2.0;
  std::uint32_t im = m.idx_;
  std::uint32_t idx =
      push(Shape::scalar(), {ld}, m.requires_grad(), nullptr, "logdet_spd");
  std::uint32_t self = idx;
  // d logdet(A) / dA = A^{-1} entrywise (A symmetric).
  std::vector<double> inv = la::inverse_from_cholesky(chol, n);
  nodes_[idx].back = [self, im, n, inv = std::move(inv)](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    if (g == 0.0) return;
    for (std::size_t k = 0; k < n * n; ++k) t.accumulate(im, k, g * inv[k]);
  };
  return Tensor(this, idx);
}

// ---------------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------------

Tensor Tape::slice(Tensor v, std::size_t lo, std::size_t hi) {
  check_owned(v);
  if (v.shape().rank != 1 || lo >= hi || hi > v.shape().d0)
    throw DimensionError("slice: range [" + std::to_string(lo) + "," +
                         std::to_string(hi) + ") invalid for " +
                         v.shape().str());
  std::vector<double> out(v.value().begin() + lo, v.value().begin() + hi);
  std::uint32_t iv = v.idx_;
  std::uint32_t idx = push(Shape::vector(hi - lo), std::move(out),
                           v.requires_grad(), nullptr, "slice");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, iv, lo](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g[k] != 0.0) t.accumulate(iv, lo + k, g[k]);
  };
  return Tensor(this, idx);
}

Tensor Tape::block(Tensor m, std::size_t r0, std::size_t r1, std::size_t c0,
                   std::size_t c1) {
  check_owned(m);
  if (m.shape().rank != 2 || r0 >= r1 || c0 >= c1 || r1 > m.shape().rows() ||
      c1 > m.shape().cols())
    throw DimensionError("block: invalid range for " + m.shape().str());
  const std::size_t c = m.shape().cols();
  const std::size_t br = r1 - r0, bc = c1 - c0;
  std::vector<double> out(br * bc);
  auto mv = m.value();
  for (std::size_t i = 0; i < br; ++i)
    for (std::size_t j = 0; j < bc; ++j)
      out[i * bc + j] = mv[(r0 + i) * c + (c0 + j)];
  std::uint32_t im = m.idx_;
  std::uint32_t idx = push(Shape::matrix(br, bc), std::move(out),
                           m.requires_grad(), nullptr, "block");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, r0, c0, br, bc, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < br; ++i)
      for (std::size_t j = 0; j < bc; ++j) {
        const double gv = g[i * bc + j];
        if (gv != 0.0) t.accumulate(im, (r0 + i) * c + (c0 + j), gv);
      }
  };
  return Tensor(this, idx);
}

Tensor Tape::pick(Tensor v, std::size_t i) {
  check_owned(v);
  if (v.shape().rank != 1 || i >= v.shape().d0)
    throw DimensionError("pick: index " + std::to_string(i) +
                         " out of range for " + v.shape().str());
  std::uint32_t iv = v.idx_;
  std::uint32_t idx = push(Shape::scalar(), {v.value()[i]}, v.requires_grad(),
                           nullptr, "pick");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, iv, i](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    if (g != 0.0) t.accumulate(iv, i, g);
  };
  return Tensor(this, idx);
}

Tensor Tape::sum(Tensor a) {
  check_owned(a);
  double s = 0.0;
  for (double x : a.value()) s += x;
  std::uint32_t ia = a.idx_;
  std::size_t n = a.size();
  std::uint32_t idx =
      push(Shape::scalar(), {s}, a.requires_grad(), nullptr, "sum");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, n](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    if (g == 0.0) return;
    for (std::size_t k = 0; k < n; ++k) t.accumulate(ia, k, g);
  };
  return Tensor(this, idx);
}

Tensor Tape::mean_rows(Tensor m) {
  check_owned(m);
  if (m.shape().rank != 2)
    throw DimensionError("mean_rows: need matrix, got " + m.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  std::vector<double> out(c, 0.0);
  auto mv = m.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += mv[i * c + j];
  for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
  std::uint32_t im = m.idx_;
  std::uint32_t idx = push(Shape::vector(c), std::move(out), m.requires_grad(),
                           nullptr, "mean_rows");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, r, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const double inv_r = 1.0 / static_cast<double>(r);
    for (std::size_t j = 0; j < c; ++j) {
      const double gj = g[j] * inv_r;
      if (gj == 0.0) continue;
      for (std::size_t i = 0; i < r; ++i) t.accumulate(im, i * c + j, gj);
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::max_rows(Tensor m) {
  check_owned(m);
  if (m.shape().rank != 2)
    throw DimensionError("max_rows: need matrix, got " + m.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  std::vector<double> out(c);
  std::vector<std::size_t> argmax(c, 0);
  auto mv = m.value();
  for (std::size_t j = 0; j < c; ++j) {
    double best = mv[j];
    std::size_t bi = 0;
    for (std::size_t i = 1; i < r; ++i) {
      if (mv[i * c + j] > best) {
        best = mv[i * c + j];
        bi = i;
      }
    }
    out[j] = best;
    argmax[j] = bi;
  }
  std::uint32_t im = m.idx_;
  std::uint32_t idx = push(Shape::vector(c), std::move(out), m.requires_grad(),
                           nullptr, "max_rows");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, c, argmax = std::move(argmax)](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t j = 0; j < c; ++j)
      if (g[j] != 0.0) t.accumulate(im, argmax[j] * c + j, g[j]);
  };
  return Tensor(this, idx);
}

Tensor Tape::add_rowvec(Tensor m, Tensor v) {
  check_owned(m);
  check_owned(v);
  if (m.shape().rank != 2 || v.shape().rank != 1 ||
      m.shape().cols() != v.shape().d0)
    throw DimensionError("add_rowvec: incompatible shapes " + m.shape().str() +
                         " vs " + v.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  std::vector<double> out(r * c);
  auto mv = m.value(), vv = v.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + vv[j];
  std::uint32_t im = m.idx_, iv = v.idx_;
  bool req = m.requires_grad() || v.requires_grad();
  std::uint32_t idx =
      push(Shape::matrix(r, c), std::move(out), req, nullptr, "add_rowvec");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, iv, r, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double gv = g[i * c + j];
        if (gv != 0.0) {
          t.accumulate(im, i * c + j, gv);
          t.accumulate(iv, j, gv);
        }
      }
  };
  return Tensor(this, idx);
}

Tensor Tape::windows(Tensor m, std::size_t w) {
  check_owned(m);
  if (m.shape().rank != 2 || w == 0 || w > m.shape().rows())
    throw DimensionError("windows: width " + std::to_string(w) +
                         " invalid for " + m.shape().str());
  const std::size_t L = m.shape().rows(), c = m.shape().cols();
  const std::size_t T = L - w + 1;
  std::vector<double> out(T * w * c);
  auto mv = m.value();
  for (std::size_t t0 = 0; t0 < T; ++t0)
    for (std::size_t u = 0; u < w; ++u)
      for (std::size_t j = 0; j < c; ++j)
        out[t0 * w * c + u * c + j] = mv[(t0 + u) * c + j];
  std::uint32_t im = m.idx_;
  std::uint32_t idx = push(Shape::matrix(T, w * c), std::move(out),
                           m.requires_grad(), nullptr, "windows");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, im, T, w, c](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t t0 = 0; t0 < T; ++t0)
      for (std::size_t u = 0; u < w; ++u)
        for (std::size_t j = 0; j < c; ++j) {
          const double gv = g[t0 * w * c + u * c + j];
          if (gv != 0.0) t.accumulate(im, (t0 + u) * c + j, gv);
        }
  };
  return Tensor(this, idx);
}

Tensor Tape::gather_rows(const Array& table, std::vector<int> rows) {
  if (table.shape.rank != 2)
    throw DimensionError("gather_rows: table must be a matrix, got " +
                         table.shape.str());
  const std::size_t V = table.shape.rows(), d = table.shape.cols();
  for (int r : rows)
    if (r < 0 || static_cast<std::size_t>(r) >= V)
      throw DimensionError("gather_rows: row " + std::to_string(r) +
                           " out of range for " + table.shape.str());
  if (table.grad.size() != table.value.size())
    table.grad.assign(table.value.size(), 0.0);
  const std::size_t R = rows.size();
  std::vector<double> out(R * d);
  for (std::size_t i = 0; i < R; ++i)
    std::copy_n(table.value.begin() + static_cast<std::size_t>(rows[i]) * d, d,
                out.begin() + i * d);
  const Array* bound = &table;
  std::uint32_t idx = push(Shape::matrix(R, d), std::move(out), true, nullptr,
                           "gather_rows");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, bound, d, rows = std::move(rows)](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t base = static_cast<std::size_t>(rows[i]) * d;
      for (std::size_t j = 0; j < d; ++j)
        bound->grad[base + j] += g[i * d + j];
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::diag_embed(Tensor v) {
  check_owned(v);
  if (v.shape().rank != 1)
    throw DimensionError("diag_embed: need vector, got " + v.shape().str());
  const std::size_t n = v.shape().d0;
  std::vector<double> out(n * n, 0.0);
  auto vv = v.value();
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] = vv[i];
  std::uint32_t iv = v.idx_;
  std::uint32_t idx = push(Shape::matrix(n, n), std::move(out),
                           v.requires_grad(), nullptr, "diag_embed");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, iv, n](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < n; ++i)
      if (g[i * n + i] != 0.0) t.accumulate(iv, i, g[i * n + i]);
  };
  return Tensor(this, idx);
}

Tensor Tape::scatter_strict_lower(Tensor packed, std::size_t n) {
  check_owned(packed);
  const std::size_t need = n * (n - 1) / 2;
  if (packed.shape().rank != 1 || packed.shape().d0 != need)
    throw DimensionError("scatter_strict_lower: need vector of length " +
                         std::to_string(need) + ", got " +
                         packed.shape().str());
  std::vector<double> out(n * n, 0.0);
  auto pv = packed.value();
  std::size_t k = 0;
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t c = 0; c < r; ++c) out[r * n + c] = pv[k++];
  std::uint32_t ip = packed.idx_;
  std::uint32_t idx = push(Shape::matrix(n, n), std::move(out),
                           packed.requires_grad(), nullptr, "scatter_lower");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ip, n](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    std::size_t k2 = 0;
    for (std::size_t r = 1; r < n; ++r)
      for (std::size_t c = 0; c < r; ++c) {
        if (g[r * n + c] != 0.0) t.accumulate(ip, k2, g[r * n + c]);
        ++k2;
      }
  };
  return Tensor(this, idx);
}

Tensor Tape::stack_scalars(std::span<const Tensor> xs) {
  if (xs.empty()) throw DimensionError("stack_scalars: empty input");
  std::vector<double> out;
  std::vector<std::uint32_t> idxs;
  bool req = false;
  out.reserve(xs.size());
  idxs.reserve(xs.size());
  for (const Tensor& x : xs) {
    check_owned(x);
    if (x.size() != 1)
      throw DimensionError("stack_scalars: non-scalar input " +
                           x.shape().str());
    out.push_back(x.value()[0]);
    idxs.push_back(x.idx_);
    req = req || x.requires_grad();
  }
  std::uint32_t idx = push(Shape::vector(xs.size()), std::move(out), req,
                           nullptr, "stack_scalars");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, idxs = std::move(idxs)](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < idxs.size(); ++k)
      if (g[k] != 0.0) t.accumulate(idxs[k], 0, g[k]);
  };
  return Tensor(this, idx);
}

Tensor Tape::scale_by(Tensor a, Tensor s) {
  check_owned(a);
  check_owned(s);
  if (s.size() != 1)
    throw DimensionError("scale_by: scale must be scalar, got " +
                         s.shape().str());
  const double sv = s.value()[0];
  std::vector<double> out(a.size());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * sv;
  std::uint32_t ia = a.idx_, is = s.idx_;
  bool req = a.requires_grad() || s.requires_grad();
  std::uint32_t idx = push(a.shape(), std::move(out), req, nullptr, "scale_by");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, ia, is, sv](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av2 = t.nodes_[ia].val;
    double ds = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] != 0.0) {
        t.accumulate(ia, k, g[k] * sv);
        ds += g[k] * av2[k];
      }
    }
    if (ds != 0.0) t.accumulate(is, 0, ds);
  };
  return Tensor(this, idx);
}

// ---------------------------------------------------------------------------
// probability
// ---------------------------------------------------------------------------

Tensor Tape::softmax(Tensor v) {
  check_owned(v);
  if (v.shape().rank != 1 || v.shape().d0 == 0)
    throw DimensionError("softmax: need non-empty vector, got " +
                         v.shape().str());
  auto vv = v.value();
  const std::size_t n = vv.size();
  double m = vv[0];
  for (double x : vv) m = std::max(m, x);
  std::vector<double> out(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(vv[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
  std::uint32_t iv = v.idx_;
  std::uint32_t idx = push(Shape::vector(n), std::move(out), v.requires_grad(),
                           nullptr, "softmax");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, iv](Tape& t) {
    const auto& me = t.nodes_[self];
    double dotgs = 0.0;
    for (std::size_t k = 0; k < me.val.size(); ++k)
      dotgs += me.grad[k] * me.val[k];
    for (std::size_t k = 0; k < me.val.size(); ++k) {
      const double gk = me.val[k] * (me.grad[k] - dotgs);
      if (gk != 0.0) t.accumulate(iv, k, gk);
    }
  };
  return Tensor(this, idx);
}

Tensor Tape::log_softmax(Tensor v) {
  check_owned(v);
  if (v.shape().rank != 1 || v.shape().d0 == 0)
    throw DimensionError("log_softmax: need non-empty vector, got " +
                         v.shape().str());
  auto vv = v.value();
  const std::size_t n = vv.size();
  double m = vv[0];
  for (double x : vv) m = std::max(m, x);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(vv[i] - m);
  const double lse = m + std::log(s);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = vv[i] - lse;
  std::uint32_t iv = v.idx_;
  std::uint32_t idx = push(Shape::vector(n), std::move(out), v.requires_grad(),
                           nullptr, "log_softmax");
  std::uint32_t self = idx;
  nodes_[idx].back = [self, iv](Tape& t) {
    const auto& me = t.nodes_[self];
    double gs = 0.0;
    for (double g : me.grad) gs += g;
    for (std::size_t k = 0; k < me.val.size(); ++k) {
      const double gk = me.grad[k] - std::exp(me.val[k]) * gs;
      if (gk != 0.0) t.accumulate(iv, k, gk);
    }
  };
  return Tensor(this, idx);
}

// ---------------------------------------------------------------------------
// autodiff driver
// ---------------------------------------------------------------------------

void Tape::backward(Tensor loss) {
  check_owned(loss);
  if (loss.size() != 1)
    throw ContractError("backward: loss must be scalar, got " +
                        loss.shape().str());
  // Node gradients are per-pass scratch; Array gradients accumulate across
  // passes.
  zero_grads();
  accumulate(loss.idx_, 0, 1.0);
  for (std::uint32_t i = loss.idx_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.grad_nonzero) continue;
    if (n.back) n.back(*this);
  }
}

void Tape::zero_grads() {
  for (Node& n : nodes_) {
    std::fill(n.grad.begin(), n.grad.end(), 0.0);
    n.grad_nonzero = false;
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------
// finite-difference verification
// ---------------------------------------------------------------------------

GradCheckReport check_gradients(const std::function<Tensor(Tape&)>& f,
                                std::span<Array* const> leaves, double h,
                                double rtol) {
  if (h <= 0.0) throw ContractError("check_gradients: h must be positive");
  GradCheckReport report;

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor out = f(tape);
    if (out.size() != 1)
      throw ContractError("check_gradients: f must return a scalar");
    for (Array* a : leaves) a->zero_grad();
    tape.backward(out);
    for (Array* a : leaves) analytic.push_back(a->grad);
  }

  auto eval = [&]() {
    Tape tape;
    return f(tape).scalar();
  };

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Array& a = *leaves[li];
    GradCheckLeaf entry;
    entry.name = a.name;
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      const double saved = a.value[i];
      a.value[i] = saved + h;
      const double fp = eval();
      a.value[i] = saved - h;
      const double fm = eval();
      a.value[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double ana = analytic[li][i];
      const double rel =
          std::fabs(ana - numeric) /
          std::max(std::fabs(ana) + std::fabs(numeric), 1e-6);
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.analytic = ana;
        entry.numeric = numeric;
      }
      if (rel > rtol) entry.flagged.push_back(i);
    }
    entry.ok = entry.flagged.empty();
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.ok = report.ok && entry.ok;
    report.leaves.push_back(std::move(entry));
  }
  return report;
}

}  // namespace disent
