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

#include "disent/ensemble.hpp"

#include <cmath>

#include "disent/common.hpp"

namespace disent {

LinearClassifier LinearClassifier::init(int classes, int dim, Rng& rng,
                                        const std::string& name) {
  LinearClassifier c;
  c.w = Array(name + ".w", Shape::matrix(static_cast<std::size_t>(classes),
                                         static_cast<std::size_t>(dim)));
  c.b = Array(name + ".b", Shape::vector(static_cast<std::size_t>(classes)));
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : c.w.value) x = rng.normal() * s;
  return c;
}

Tensor LinearClassifier::logits(Tape& tape, Tensor z) const {
  return tape.add(tape.matvec(tape.leaf(w), z), tape.leaf(b));
}

std::vector<Tensor> head_logits(Tape& tape, Tensor w,
                                std::span<const Tensor> zs) {
  std::vector<Tensor> ls;
  ls.reserve(zs.size());
  for (const Tensor& z : zs) ls.push_back(tape.matvec(w, z));
  return ls;
}

Tensor attention_weights(Tape& tape, Tensor w_a,
                         std::span<const Tensor> zs) {
  if (zs.empty()) throw ContractError("attention_weights: no heads");
  std::vector<Tensor> scores;
  scores.reserve(zs.size());
  for (const Tensor& z : zs) scores.push_back(tape.dot(z, w_a));
  return tape.softmax(tape.stack_scalars(scores));
}

Tensor combine(Tape& tape, std::span<const Tensor> ls, Tensor alpha) {
  if (ls.empty()) throw ContractError("combine: no logits");
  if (alpha.shape().rank != 1 || alpha.size() != ls.size())
    throw DimensionError("combine: alpha shape " + alpha.shape().str() +
                         " does not match " + std::to_string(ls.size()) +
                         " heads");
  double s = 0.0;
  for (double a : alpha.value()) s += a;
  if (std::fabs(s - 1.0) > 1e-8)
    throw ContractError("combine: weights sum to " + std::to_string(s) +
                        ", expected 1 within 1e-8");
  Tensor out;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    Tensor scaled = tape.scale_by(ls[i], tape.pick(alpha, i));
    out = i == 0 ? scaled : tape.add(out, scaled);
  }
  return out;
}

}  // namespace disent
