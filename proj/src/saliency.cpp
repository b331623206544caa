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

#include "disent/saliency.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "disent/common.hpp"

namespace disent {

SaliencyMap saliency_from_trace(Tape& tape, Tensor sequence,
                                std::span<const std::size_t> positions,
                                std::span<const Tensor> heads,
                                std::size_t n_positions) {
  SaliencyMap map;
  map.heads = heads.size();
  map.scores.assign(map.heads, std::vector<double>(n_positions, 0.0));
  const std::size_t emb = sequence.shape().cols();
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const std::size_t width = heads[i].size();
    for (std::size_t j = 0; j < width; ++j) {
      Tensor zij = tape.pick(heads[i], j);
      tape.backward(zij);
      auto g = sequence.grad();
      for (std::size_t r = 0; r < positions.size(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < emb; ++c) s += std::fabs(g[r * emb + c]);
        map.scores[i][positions[r]] += s;
      }
    }
  }
  return map;
}

SaliencyMap head_saliency(const Model& model, std::span<const int> tokens,
                          const Vocabulary* vocab) {
  if (tokens.empty()) throw EmptyInputError("head_saliency: empty input");
  Tape tape;
  Model::TracedHeads fwd = model.forward_heads_traced(tape, tokens);
  SaliencyMap map =
      saliency_from_trace(tape, fwd.trace.sequence, fwd.trace.positions,
                          fwd.heads, tokens.size());
  map.tokens.clear();
  for (int t : tokens)
    map.tokens.push_back(vocab ? vocab->token(t) : "#" + std::to_string(t));
  return map;
}

double head_divergence(const SaliencyMap& map) {
  if (map.heads < 2)
    throw ContractError("head_divergence: need K >= 2 heads, got " +
                        std::to_string(map.heads));
  const std::size_t K = map.heads;
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j) {
      const auto& a = map.scores[i];
      const auto& b = map.scores[j];
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t p = 0; p < a.size(); ++p) {
        dot += a[p] * b[p];
        na += a[p] * a[p];
        nb += b[p] * b[p];
      }
      double cosine;
      if (na == 0.0 && nb == 0.0)
        cosine = 1.0;  // both identically zero: identical profiles
      else if (na == 0.0 || nb == 0.0)
        cosine = 0.0;
      else
        cosine = dot / (std::sqrt(na) * std::sqrt(nb));
      acc += 1.0 - cosine;
      ++pairs;
    }
  return acc / static_cast<double>(pairs);
}

std::string heatmap_json_string(const SaliencyMap& map) {
  nlohmann::json doc;
  doc["tokens"] = map.tokens;
  doc["normalization"] = "per-head max";
  nlohmann::json heads = nlohmann::json::array();
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& row : map.scores) {
    double mx = 0.0;
    for (double v : row) mx = std::max(mx, v);
    nlohmann::json norm_row = nlohmann::json::array();
    nlohmann::json raw_row = nlohmann::json::array();
    for (double v : row) {
      norm_row.push_back(mx > 0.0 ? v / mx : 0.0);
      raw_row.push_back(v);
    }
    heads.push_back(std::move(norm_row));
    raw.push_back(std::move(raw_row));
  }
  doc["heads"] = std::move(heads);
  doc["raw"] = std::move(raw);
  return doc.dump(2);
}

void export_heatmap(const SaliencyMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write heatmap: " + path.string());
  out << heatmap_json_string(map) << "\n";
  if (!out) throw IoError("write failed for heatmap: " + path.string());
}

SaliencyMap read_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read heatmap: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("heatmap " + path.string() + ": " + e.what());
  }
  SaliencyMap map;
  map.tokens = doc.at("tokens").get<std::vector<std::string>>();
  map.scores = doc.at("raw").get<std::vector<std::vector<double>>>();
  map.heads = map.scores.size();
  return map;
}

}  // namespace disent
