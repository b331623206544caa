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

// Token-sequence encoders: a bag-of-words MLP and a 1-D convolutional encoder
// with max-over-time pooling, the K-way head projector, and the stochastic
// Gaussian output layer used by the variational models.

#ifndef DISENT_ENCODER_HPP_
#define DISENT_ENCODER_HPP_

#include <optional>
#include <span>
#include <vector>

#include "disent/rng.hpp"
#include "disent/tensor.hpp"

namespace disent {

enum class EncoderKind { BowMlp, Cnn };

struct Encoder {
  EncoderKind kind = EncoderKind::BowMlp;
  int emb_dim = 0;
  int hidden = 0;    // bow-mlp hidden width; cnn ignores
  int out_dim = 0;
  int conv_width = 3;

  // bow-mlp: w1 [hidden x emb] b1 [hidden] w2 [out x hidden] b2 [out]
  // cnn:     w1 [out x width*emb] (filter bank) b1 [out]; w2/b2 unused
  Array w1, b1, w2, b2;

  static Encoder init(EncoderKind kind, int emb_dim, int hidden, int out_dim,
                      Rng& rng, int conv_width = 3);

  // Length-out_dim vector on the tape, differentiable back to the embedding
  // rows it touched. Padding tokens are dropped before encoding; an input that
  // is empty (or all padding) raises EmptyInputError.
  Tensor encode(Tape& tape, const Array& embeddings,
                std::span<const int> tokens) const;

  // The embedding-sequence node feeding the encoder, one row per non-padding
  // position. Saliency reads per-position gradients off this node.
  struct Traced {
    Tensor sequence;  // [L_eff x emb]
    std::vector<std::size_t> positions;  // original index of each row
    Tensor output;
  };
  Traced encode_traced(Tape& tape, const Array& embeddings,
                       std::span<const int> tokens) const;

  std::vector<Array*> parameters();
};

// K distinct d x d projections z_i = W_i z.
struct HeadProjector {
  std::vector<Array> w;

  static HeadProjector init(int heads, int dim, Rng& rng);
  std::vector<Tensor> project(Tape& tape, Tensor z) const;
  int heads() const { return static_cast<int>(w.size()); }
};

struct HeadRange {
  std::size_t lo = 0, hi = 0;
  std::size_t width() const { return hi - lo; }
};

// Per-input stochastic encoding p(z|x). Diagonal mode carries mean and scale;
// joint mode additionally carries a lower-triangular Cholesky factor of the
// joint covariance plus the contiguous head partition of 1..D.
struct GaussianPosterior {
  Tensor mean;
  Tensor scale;
  std::optional<Tensor> joint_factor;
  std::vector<HeadRange> head_partition;

  bool joint() const { return joint_factor.has_value(); }
  std::size_t dim() const { return mean.size(); }
};

// Maps encoder features to a GaussianPosterior. The first D outputs encode
// the mean, the next D the scale through softplus; joint mode adds
// D(D+1)/2 outputs that assemble the Cholesky factor (softplus diagonal).
struct StochasticLayer {
  int in_dim = 0;
  int latent_dim = 0;  // D
  int heads = 1;       // K contiguous slices of the latent
  bool joint = false;

  Array w_mu, b_mu, w_sigma, b_sigma;
  Array w_diag, b_diag, w_off, b_off;  // joint mode only

  static StochasticLayer init(int in_dim, int latent_dim, bool joint,
                              int heads, Rng& rng);
  GaussianPosterior apply(Tape& tape, Tensor features) const;
  std::vector<Array*> parameters();
};

std::vector<HeadRange> make_head_partition(std::size_t dim, std::size_t heads);

// Reparameterized draw: diagonal mode z = mu + eps*sigma, joint mode
// z = mu + L eps. Differentiable in mu, sigma and L.
Tensor sample(Tape& tape, const GaussianPosterior& post, Tensor eps);

}  // namespace disent

#endif  // DISENT_ENCODER_HPP_
