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

// Per-head logits, attention weights over heads, and the combined logit.

#ifndef DISENT_ENSEMBLE_HPP_
#define DISENT_ENSEMBLE_HPP_

#include <span>
#include <vector>

#include "disent/rng.hpp"
#include "disent/tensor.hpp"

namespace disent {

// Softmax classifier logits = W z + b.
struct LinearClassifier {
  Array w;  // [T x d]
  Array b;  // [T]

  static LinearClassifier init(int classes, int dim, Rng& rng,
                               const std::string& name = "clf");
  Tensor logits(Tape& tape, Tensor z) const;
  std::vector<Array*> parameters() { return {&w, &b}; }
};

// l_i = W z_i with one shared classifier matrix (no bias).
std::vector<Tensor> head_logits(Tape& tape, Tensor w, std::span<const Tensor> zs);

// alpha = softmax([z_1.w_a, ..., z_K.w_a]).
Tensor attention_weights(Tape& tape, Tensor w_a, std::span<const Tensor> zs);

// l = sum_i alpha_i l_i. alpha must sum to 1 within 1e-8.
Tensor combine(Tape& tape, std::span<const Tensor> ls, Tensor alpha);

}  // namespace disent

#endif  // DISENT_ENSEMBLE_HPP_
