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

// The four model families behind one struct: a shared token encoder plus
// either the projected-head ensemble (baseline, regularizer) or a stochastic
// Gaussian head (vib, vib_tc).

#ifndef DISENT_MODEL_HPP_
#define DISENT_MODEL_HPP_

#include <span>
#include <string>
#include <vector>

#include "disent/encoder.hpp"
#include "disent/ensemble.hpp"
#include "disent/objectives.hpp"

namespace disent {

enum class Family { Baseline, Regularizer, Vib, VibTc };

std::string to_string(Family f);
Family family_from_string(const std::string& s);
std::string to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);

struct ModelConfig {
  Family family = Family::Baseline;
  EncoderKind encoder = EncoderKind::BowMlp;
  int vocab_size = 0;
  int emb_dim = 16;    // embedding width == encoder output width d
  int hidden = 16;     // bow-mlp hidden width
  int latent_dim = 16; // D (vib family)
  int heads = 4;       // K
  int classes = 2;     // T
  double beta = 0.0;
  double lambda_tc = 0.0;
  int train_samples = 1;
  int eval_samples = 0;  // 0 = decode at the posterior mean
  int conv_width = 3;
  bool head_loss_mean = false;  // vib_tc task term: sum (default) or mean
  bool train_embeddings = true;

  // K for the forward pass; the baseline is the single-head degenerate case
  // of the regularizer model so both share one code path and one RNG stream.
  int effective_heads() const { return family == Family::Baseline ? 1 : heads; }
  double effective_beta() const { return family == Family::Baseline ? 0.0 : beta; }
  void validate() const;
};

struct Prediction {
  int label = 0;
  std::vector<double> probs;
};

enum class PredictMode { Regularizer, Vib, VibTc };

struct Model {
  ModelConfig cfg;
  Array embeddings;  // [V x d]
  Encoder encoder;

  // regularizer / baseline
  HeadProjector projector;
  Array clf_w;  // shared [T x d], no bias (per the head-logit map)
  Array attn;   // w_a [d]

  // vib / vib_tc
  StochasticLayer stoch;
  LinearClassifier vib_clf;                 // vib: [T x D]
  std::vector<LinearClassifier> head_clf;   // vib_tc: K x [T x D/K]

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  struct RegForward {
    Tensor z;
    std::vector<Tensor> zs;
    std::vector<Tensor> head_ls;
    Tensor alpha;
    Tensor combined;
  };
  RegForward forward_regularizer(Tape& tape, std::span<const int> tokens) const;
  GaussianPosterior forward_gaussian(Tape& tape, std::span<const int> tokens) const;

  // Per-head representation tensors plus the traced embedding sequence, for
  // saliency: projected z_i for the regularizer path, posterior-mean slices
  // for the variational path.
  struct TracedHeads {
    Encoder::Traced trace;
    std::vector<Tensor> heads;
  };
  TracedHeads forward_heads_traced(Tape& tape, std::span<const int> tokens) const;

  // Training loss of one example under the family objective.
  LossBreakdown example_loss(Tape& tape, std::span<const int> tokens, int label,
                             Rng& rng) const;
  // Deterministic validation loss (decodes at the posterior mean).
  LossBreakdown example_loss_mean(Tape& tape, std::span<const int> tokens,
                                  int label) const;

  Prediction predict(std::span<const int> tokens, int eval_samples,
                     std::uint64_t seed = 0) const;
  Prediction predict_mode(PredictMode mode, std::span<const int> tokens,
                          int eval_samples, std::uint64_t seed = 0) const;

  std::vector<Array*> parameters();        // trainable, stable order
  std::vector<Array*> all_arrays();        // checkpoint set, stable order
  std::vector<const Array*> all_arrays() const;
};

}  // namespace disent

#endif  // DISENT_MODEL_HPP_
