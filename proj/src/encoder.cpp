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

#include "disent/encoder.hpp"

#include <cmath>

#include "disent/common.hpp"
#include "disent/vocab.hpp"

namespace disent {

namespace {

void init_weight(Array& a, Rng& rng, std::size_t fan_in) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : a.value) x = rng.normal() * s;
}

}  // namespace

Encoder Encoder::init(EncoderKind kind, int emb_dim, int hidden, int out_dim,
                      Rng& rng, int conv_width) {
  if (emb_dim <= 0 || out_dim <= 0)
    throw ContractError("encoder: dimensions must be positive");
  Encoder e;
  e.kind = kind;
  e.emb_dim = emb_dim;
  e.hidden = hidden;
  e.out_dim = out_dim;
  e.conv_width = conv_width;
  if (kind == EncoderKind::BowMlp) {
    if (hidden <= 0) throw ContractError("bow-mlp: hidden width must be positive");
    e.w1 = Array("enc.w1", Shape::matrix(hidden, emb_dim));
    e.b1 = Array("enc.b1", Shape::vector(hidden));
    e.w2 = Array("enc.w2", Shape::matrix(out_dim, hidden));
    e.b2 = Array("enc.b2", Shape::vector(out_dim));
    init_weight(e.w1, rng, emb_dim);
    init_weight(e.w2, rng, hidden);
  } else {
    if (conv_width <= 0) throw ContractError("cnn: conv width must be positive");
    e.w1 = Array("enc.conv_kernel",
                 Shape::matrix(static_cast<std::size_t>(conv_width) * emb_dim,
                               out_dim));
    e.b1 = Array("enc.conv_bias", Shape::vector(out_dim));
    init_weight(e.w1, rng, static_cast<std::size_t>(conv_width) * emb_dim);
  }
  return e;
}

Encoder::Traced Encoder::encode_traced(Tape& tape, const Array& embeddings,
                                       std::span<const int> tokens) const {
  std::vector<int> keep;
  std::vector<std::size_t> positions;
  keep.reserve(tokens.size());
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (tokens[p] != Vocabulary::kPad) {
      keep.push_back(tokens[p]);
      positions.push_back(p);
    }
  }
  if (keep.empty())
    throw EmptyInputError("encode: input is empty after padding removal");

  Traced out;
  if (kind == EncoderKind::BowMlp) {
    out.sequence = tape.gather_rows(embeddings, keep);
    out.positions = std::move(positions);
    Tensor avg = tape.mean_rows(out.sequence);
    Tensor h = tape.tanh(tape.add(tape.matvec(tape.leaf(w1), avg), tape.leaf(b1)));
    out.output = tape.add(tape.matvec(tape.leaf(w2), h), tape.leaf(b2));
    return out;
  }

  // cnn: short inputs are right-padded with the padding row so at least one
  // window exists.
  const std::size_t w = static_cast<std::size_t>(conv_width);
  while (keep.size() < w) keep.push_back(Vocabulary::kPad);
  out.sequence = tape.gather_rows(embeddings, keep);
  out.positions = std::move(positions);
  Tensor win = tape.windows(out.sequence, w);
  Tensor conv = tape.add_rowvec(tape.matmul(win, tape.leaf(w1)), tape.leaf(b1));
  out.output = tape.max_rows(tape.tanh(conv));
  return out;
}

Tensor Encoder::encode(Tape& tape, const Array& embeddings,
                       std::span<const int> tokens) const {
  return encode_traced(tape, embeddings, tokens).output;
}

std::vector<Array*> Encoder::parameters() {
  if (kind == EncoderKind::BowMlp) return {&w1, &b1, &w2, &b2};
  return {&w1, &b1};
}

HeadProjector HeadProjector::init(int heads, int dim, Rng& rng) {
  if (heads < 1) throw ContractError("head projector: K must be >= 1");
  HeadProjector hp;
  hp.w.reserve(static_cast<std::size_t>(heads));
  for (int i = 0; i < heads; ++i) {
    Array a("head.w" + std::to_string(i),
            Shape::matrix(static_cast<std::size_t>(dim),
                          static_cast<std::size_t>(dim)));
    init_weight(a, rng, static_cast<std::size_t>(dim));
    hp.w.push_back(std::move(a));
  }
  return hp;
}

std::vector<Tensor> HeadProjector::project(Tape& tape, Tensor z) const {
  std::vector<Tensor> zs;
  zs.reserve(w.size());
  for (const Array& wi : w) zs.push_back(tape.matvec(tape.leaf(wi), z));
  return zs;
}

std::vector<HeadRange> make_head_partition(std::size_t dim,
                                           std::size_t heads) {
  if (heads == 0 || dim % heads != 0)
    throw ContractError("head partition: latent dim " + std::to_string(dim) +
                        " not divisible by K=" + std::to_string(heads));
  std::vector<HeadRange> parts;
  const std::size_t w = dim / heads;
  for (std::size_t i = 0; i < heads; ++i)
    parts.push_back(HeadRange{i * w, (i + 1) * w});
  return parts;
}

StochasticLayer StochasticLayer::init(int in_dim, int latent_dim, bool joint,
                                      int heads, Rng& rng) {
  if (in_dim <= 0 || latent_dim <= 0)
    throw ContractError("stochastic layer: dimensions must be positive");
  StochasticLayer s;
  s.in_dim = in_dim;
  s.latent_dim = latent_dim;
  s.joint = joint;
  s.heads = heads;
  const auto D = static_cast<std::size_t>(latent_dim);
  const auto in = static_cast<std::size_t>(in_dim);
  s.w_mu = Array("stoch.w_mu", Shape::matrix(D, in));
  s.b_mu = Array("stoch.b_mu", Shape::vector(D));
  s.w_sigma = Array("stoch.w_sigma", Shape::matrix(D, in));
  s.b_sigma = Array("stoch.b_sigma", Shape::vector(D));
  init_weight(s.w_mu, rng, in);
  init_weight(s.w_sigma, rng, in);
  if (joint) {
    make_head_partition(D, static_cast<std::size_t>(heads));
    const std::size_t off = D * (D - 1) / 2;
    s.w_diag = Array("stoch.w_diag", Shape::matrix(D, in));
    s.b_diag = Array("stoch.b_diag", Shape::vector(D));
    s.w_off = Array("stoch.w_off", Shape::matrix(off, in));
    s.b_off = Array("stoch.b_off", Shape::vector(off));
    init_weight(s.w_diag, rng, in);
    init_weight(s.w_off, rng, in);
  }
  return s;
}

GaussianPosterior StochasticLayer::apply(Tape& tape, Tensor features) const {
  GaussianPosterior post;
  post.mean = tape.add(tape.matvec(tape.leaf(w_mu), features), tape.leaf(b_mu));
  post.scale = tape.softplus(
      tape.add(tape.matvec(tape.leaf(w_sigma), features), tape.leaf(b_sigma)));
  if (joint) {
    const auto D = static_cast<std::size_t>(latent_dim);
    Tensor diag_raw =
        tape.add(tape.matvec(tape.leaf(w_diag), features), tape.leaf(b_diag));
    Tensor ltri = tape.diag_embed(tape.softplus(diag_raw));
    if (D > 1) {
      Tensor off_raw =
          tape.add(tape.matvec(tape.leaf(w_off), features), tape.leaf(b_off));
      ltri = tape.add(ltri, tape.scatter_strict_lower(off_raw, D));
    }
    post.joint_factor = ltri;
    post.head_partition =
        make_head_partition(D, static_cast<std::size_t>(heads));
  }
  return post;
}

std::vector<Array*> StochasticLayer::parameters() {
  std::vector<Array*> p = {&w_mu, &b_mu, &w_sigma, &b_sigma};
  if (joint) {
    p.push_back(&w_diag);
    p.push_back(&b_diag);
    p.push_back(&w_off);
    p.push_back(&b_off);
  }
  return p;
}

Tensor sample(Tape& tape, const GaussianPosterior& post, Tensor eps) {
  if (eps.shape().rank != 1 || eps.size() != post.dim())
    throw DimensionError("sample: eps shape " + eps.shape().str() +
                         " does not match posterior dimension " +
                         std::to_string(post.dim()));
  if (post.joint()) return tape.add(post.mean, tape.matvec(*post.joint_factor, eps));
  return tape.add(post.mean, tape.mul(eps, post.scale));
}

}  // namespace disent
