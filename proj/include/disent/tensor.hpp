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

// Minimal reverse-mode differentiation over dense 64-bit real tensors of
// rank <= 2. A Tape records primitive operations in topological order; one
// backward pass accumulates gradients into every recorded node and into the
// Array leaves bound to the tape. Tapes are cheap and rebuilt per example.

#ifndef DISENT_TENSOR_HPP_
#define DISENT_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "disent/common.hpp"

namespace disent {

struct Shape {
  std::uint8_t rank = 0;
  std::size_t d0 = 1;  // vector length or matrix rows
  std::size_t d1 = 1;  // matrix cols

  static Shape scalar() { return Shape{0, 1, 1}; }
  static Shape vector(std::size_t n) { return Shape{1, n, 1}; }
  static Shape matrix(std::size_t r, std::size_t c) { return Shape{2, r, c}; }

  std::size_t numel() const { return rank == 0 ? 1 : d0 * d1; }
  std::size_t rows() const { return d0; }
  std::size_t cols() const { return d1; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Off-tape value holder: a trainable parameter or any buffer gradients should
// flow into. Arrays outlive the tapes that reference them. grad is scratch
// space (mutable) so that forward-only evaluation of a frozen model stays
// const; backward is the only writer.
struct Array {
  std::string name;
  Shape shape;
  std::vector<double> value;
  mutable std::vector<double> grad;

  Array() = default;
  Array(std::string n, Shape s, double fill = 0.0)
      : name(std::move(n)),
        shape(s),
        value(s.numel(), fill),
        grad(s.numel(), 0.0) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() const { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

// Lightweight handle to a node on a Tape.
class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const;
  std::span<const double> value() const;
  std::span<const double> grad() const;
  bool requires_grad() const;
  std::size_t size() const { return shape().numel(); }
  double scalar() const;  // numel()==1 or ContractError
  double at(std::size_t i) const { return value()[i]; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* t, std::uint32_t i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  std::uint32_t idx_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // --- leaves -------------------------------------------------------------
  Tensor leaf(const Array& a);  // tracked; backward adds into a.grad
  Tensor constant(Shape s, std::vector<double> v);
  Tensor constant(double v);
  Tensor constant_vector(std::vector<double> v);

  // --- elementwise (same shape) -------------------------------------------
  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor neg(Tensor a);
  Tensor scale(Tensor a, double c);
  Tensor add_scalar(Tensor a, double c);
  Tensor exp(Tensor a);
  Tensor log(Tensor a);  // strictly positive input
  Tensor tanh(Tensor a);
  Tensor softplus(Tensor a);
  Tensor square(Tensor a) { return mul(a, a); }

  // --- linear algebra -------------------------------------------------------
  Tensor matmul(Tensor a, Tensor b);   // [m,k]x[k,n] -> [m,n]
  Tensor matvec(Tensor m, Tensor v);   // [r,c]x[c] -> [r]
  Tensor dot(Tensor a, Tensor b);      // [n].[n] -> scalar
  Tensor transpose(Tensor m);
  Tensor trace(Tensor m);              // square matrix -> scalar
  Tensor logdet_spd(Tensor m);         // SPD matrix -> scalar

  // --- structure ------------------------------------------------------------
  Tensor slice(Tensor v, std::size_t lo, std::size_t hi);  // vector [lo,hi)
  Tensor block(Tensor m, std::size_t r0, std::size_t r1, std::size_t c0,
               std::size_t c1);
  Tensor pick(Tensor v, std::size_t i);  // -> scalar
  Tensor sum(Tensor a);                  // all elements -> scalar
  Tensor mean_rows(Tensor m);            // [r,c] -> [c]
  Tensor max_rows(Tensor m);             // columnwise max, [r,c] -> [c]
  Tensor add_rowvec(Tensor m, Tensor v);
  Tensor windows(Tensor m, std::size_t w);  // [L,c] -> [L-w+1, w*c]
  Tensor gather_rows(const Array& table, std::vector<int> rows);
  Tensor diag_embed(Tensor v);                              // [n] -> [n,n]
  Tensor scatter_strict_lower(Tensor packed, std::size_t n);  // [n(n-1)/2] -> [n,n]
  Tensor stack_scalars(std::span<const Tensor> xs);         // K scalars -> [K]
  Tensor scale_by(Tensor a, Tensor s);                      // a * scalar s

  // --- probability -----------------------------------------------------------
  Tensor softmax(Tensor v);
  Tensor log_softmax(Tensor v);

  // --- autodiff ----------------------------------------------------------------
  // Accumulates gradients for every node below `loss` and into bound Arrays.
  // Repeated calls without zero_grads() keep accumulating.
  void backward(Tensor loss);
  void zero_grads();  // node gradients only; Array grads are the caller's
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Tensor;
  struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> back;  // empty for constants and plain leaves
    const Array* bound = nullptr;     // leaf: backward adds grad into bound
    bool requires_grad = false;
    bool grad_nonzero = false;
  };

  std::uint32_t push(Shape s, std::vector<double> v, bool req,
                     std::function<void(Tape&)> back, const char* op);
  Node& node(std::uint32_t i) { return nodes_[i]; }
  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  void accumulate(std::uint32_t i, std::size_t k, double g) {
    Node& n = nodes_[i];
    n.grad[k] += g;
    n.grad_nonzero = true;
  }
  void check_same_shape(const char* op, Tensor a, Tensor b) const;
  void check_owned(Tensor t) const;

  std::vector<Node> nodes_;
};

// Central-difference gradient verification. `f` rebuilds its graph from the
// given leaves on every call; the analytic pass and each probe use fresh
// tapes, so f must be deterministic.
struct GradCheckLeaf {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::vector<std::size_t> flagged;  // entries with rel err > rtol
  bool ok = true;
};

struct GradCheckReport {
  std::vector<GradCheckLeaf> leaves;
  double max_rel_err = 0.0;
  bool ok = true;
};

GradCheckReport check_gradients(const std::function<Tensor(Tape&)>& f,
                                std::span<Array* const> leaves, double h,
                                double rtol);

}  // namespace disent

#endif  // DISENT_TENSOR_HPP_
