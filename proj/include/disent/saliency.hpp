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

// First-derivative saliency of each head representation with respect to the
// input embeddings, heatmap export, and the pairwise head-divergence score.

#ifndef DISENT_SALIENCY_HPP_
#define DISENT_SALIENCY_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "disent/model.hpp"
#include "disent/vocab.hpp"

namespace disent {

struct SaliencyMap {
  std::vector<std::string> tokens;          // one per input position
  std::size_t heads = 0;
  std::vector<std::vector<double>> scores;  // [K][positions], all >= 0
};

// S_i(p) = sum_j sum_c |d z_i[j] / d e_p[c]|, one backward pass per head
// coordinate. Padding positions receive exactly zero.
SaliencyMap head_saliency(const Model& model, std::span<const int> tokens,
                          const Vocabulary* vocab = nullptr);

// Same computation over an already-built forward pass: `sequence` is the
// embedding matrix node (one row per kept position), `positions[r]` the input
// position of row r, `heads` the representation vectors to differentiate.
SaliencyMap saliency_from_trace(Tape& tape, Tensor sequence,
                                std::span<const std::size_t> positions,
                                std::span<const Tensor> heads,
                                std::size_t n_positions);

// Mean over head pairs of 1 - cosine similarity between position profiles.
double head_divergence(const SaliencyMap& map);

// The heatmap document: tokens, per-head max-normalized scores, raw scores.
std::string heatmap_json_string(const SaliencyMap& map);
void export_heatmap(const SaliencyMap& map, const std::filesystem::path& path);
SaliencyMap read_heatmap(const std::filesystem::path& path);

}  // namespace disent

#endif  // DISENT_SALIENCY_HPP_
