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

#include "disent/model.hpp"

#include <algorithm>
#include <cmath>

#include "disent/common.hpp"

namespace disent {

std::string to_string(Family f) {
  switch (f) {
    case Family::Baseline:
      return "baseline";
    case Family::Regularizer:
      return "regularizer";
    case Family::Vib:
      return "vib";
    case Family::VibTc:
      return "vib_tc";
  }
  throw ContractError("unknown family value");
}

Family family_from_string(const std::string& s) {
  if (s == "baseline") return Family::Baseline;
  if (s == "regularizer") return Family::Regularizer;
  if (s == "vib") return Family::Vib;
  if (s == "vib_tc") return Family::VibTc;
  throw ContractError("unknown model family '" + s + "'");
}

std::string to_string(EncoderKind k) {
  return k == EncoderKind::BowMlp ? "bow" : "cnn";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "bow" || s == "bow-mlp") return EncoderKind::BowMlp;
  if (s == "cnn") return EncoderKind::Cnn;
  throw ContractError("unknown encoder kind '" + s + "'");
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ContractError("config: vocab_size must be >= 2");
  if (emb_dim <= 0 || hidden <= 0 || classes < 2)
    throw ContractError("config: dimensions must be positive, classes >= 2");
  if (beta < 0.0 || lambda_tc < 0.0)
    throw ContractError("config: beta and lambda_tc must be >= 0");
  if (heads < 1) throw ContractError("config: K must be >= 1");
  if (train_samples < 1)
    throw ContractError("config: train_samples must be >= 1");
  if (eval_samples < 0)
    throw ContractError("config: eval_samples must be >= 0");
  if (family == Family::Vib || family == Family::VibTc) {
    if (latent_dim <= 0) throw ContractError("config: D must be positive");
    if (family == Family::VibTc && latent_dim % heads != 0)
      throw ContractError("config: D must be divisible by K in vib_tc mode");
  }
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng rng(seed);

  m.embeddings = Array("embeddings",
                       Shape::matrix(static_cast<std::size_t>(cfg.vocab_size),
                                     static_cast<std::size_t>(cfg.emb_dim)));
  for (double& x : m.embeddings.value) x = rng.normal() * 0.5;

  m.encoder = Encoder::init(cfg.encoder, cfg.emb_dim, cfg.hidden, cfg.emb_dim,
                            rng, cfg.conv_width);

  if (cfg.family == Family::Baseline || cfg.family == Family::Regularizer) {
    m.projector = HeadProjector::init(cfg.effective_heads(), cfg.emb_dim, rng);
    m.clf_w = Array("clf.w", Shape::matrix(static_cast<std::size_t>(cfg.classes),
                                           static_cast<std::size_t>(cfg.emb_dim)));
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg.emb_dim));
    for (double& x : m.clf_w.value) x = rng.normal() * s;
    m.attn = Array("attn.w_a", Shape::vector(static_cast<std::size_t>(cfg.emb_dim)));
    for (double& x : m.attn.value) x = rng.normal() * s;
  } else {
    m.stoch = StochasticLayer::init(cfg.emb_dim, cfg.latent_dim,
                                    cfg.family == Family::VibTc, cfg.heads, rng);
    if (cfg.family == Family::Vib) {
      m.vib_clf = LinearClassifier::init(cfg.classes, cfg.latent_dim, rng, "clf");
    } else {
      const int head_width = cfg.latent_dim / cfg.heads;
      for (int i = 0; i < cfg.heads; ++i)
        m.head_clf.push_back(LinearClassifier::init(
            cfg.classes, head_width, rng, "clf.head" + std::to_string(i)));
    }
  }
  return m;
}

Model::RegForward Model::forward_regularizer(Tape& tape,
                                             std::span<const int> tokens) const {
  RegForward f;
  f.z = encoder.encode(tape, embeddings, tokens);
  f.zs = projector.project(tape, f.z);
  f.head_ls = head_logits(tape, tape.leaf(clf_w), f.zs);
  f.alpha = attention_weights(tape, tape.leaf(attn), f.zs);
  f.combined = combine(tape, f.head_ls, f.alpha);
  return f;
}

GaussianPosterior Model::forward_gaussian(Tape& tape,
                                          std::span<const int> tokens) const {
  Tensor u = encoder.encode(tape, embeddings, tokens);
  return stoch.apply(tape, u);
}

Model::TracedHeads Model::forward_heads_traced(
    Tape& tape, std::span<const int> tokens) const {
  TracedHeads out;
  out.trace = encoder.encode_traced(tape, embeddings, tokens);
  if (cfg.family == Family::Baseline || cfg.family == Family::Regularizer) {
    out.heads = projector.project(tape, out.trace.output);
    return out;
  }
  GaussianPosterior post = stoch.apply(tape, out.trace.output);
  if (cfg.family == Family::Vib) {
    out.heads = {post.mean};
  } else {
    for (const HeadRange& r : post.head_partition)
      out.heads.push_back(tape.slice(post.mean, r.lo, r.hi));
  }
  return out;
}

LossBreakdown Model::example_loss(Tape& tape, std::span<const int> tokens,
                                  int label, Rng& rng) const {
  switch (cfg.family) {
    case Family::Baseline:
    case Family::Regularizer: {
      // Disentangling direction: the pairwise distance term is maximized, so
      // it enters the minimized total with a negative sign. reg holds the
      // weighted magnitude.
      RegForward f = forward_regularizer(tape, tokens);
      Tensor ce = cross_entropy(tape, f.combined, label);
      Tensor reg = l2_disentangle(tape, f.zs);
      const double beta = cfg.effective_beta();
      LossBreakdown out;
      out.total = tape.sub(ce, tape.scale(reg, beta));
      out.task = ce.scalar();
      out.reg_raw = reg.scalar();
      out.reg = beta * out.reg_raw;
      return out;
    }
    case Family::Vib: {
      GaussianPosterior post = forward_gaussian(tape, tokens);
      return l_vib(tape, post, vib_clf, label, cfg.beta, cfg.train_samples, rng);
    }
    case Family::VibTc: {
      GaussianPosterior post = forward_gaussian(tape, tokens);
      return l_vib_tc(tape, post, head_clf, label, cfg.beta, cfg.lambda_tc,
                      cfg.train_samples, rng, cfg.head_loss_mean);
    }
  }
  throw ContractError("example_loss: unknown family");
}

LossBreakdown Model::example_loss_mean(Tape& tape, std::span<const int> tokens,
                                       int label) const {
  if (cfg.family == Family::Baseline || cfg.family == Family::Regularizer) {
    Rng unused(0);
    return example_loss(tape, tokens, label, unused);
  }
  std::vector<std::vector<double>> zero_draw(
      1, std::vector<double>(static_cast<std::size_t>(cfg.latent_dim), 0.0));
  GaussianPosterior post = forward_gaussian(tape, tokens);
  if (cfg.family == Family::Vib)
    return l_vib_with_draws(tape, post, vib_clf, label, cfg.beta, zero_draw);
  return l_vib_tc_with_draws(tape, post, head_clf, label, cfg.beta,
                             cfg.lambda_tc, zero_draw, cfg.head_loss_mean);
}

namespace {

std::vector<double> softmax_values(std::span<const double> v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  std::vector<double> p(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = std::exp(v[i] - m);
    s += p[i];
  }
  for (double& x : p) x /= s;
  return p;
}

int argmax(std::span<const double> p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

Prediction Model::predict_mode(PredictMode mode, std::span<const int> tokens,
                               int eval_samples, std::uint64_t seed) const {
  Prediction out;
  Tape tape;
  switch (mode) {
    case PredictMode::Regularizer: {
      RegForward f = forward_regularizer(tape, tokens);
      out.probs = softmax_values(f.combined.value());
      break;
    }
    case PredictMode::Vib: {
      GaussianPosterior post = forward_gaussian(tape, tokens);
      if (eval_samples <= 0) {
        out.probs = softmax_values(vib_clf.logits(tape, post.mean).value());
      } else {
        Rng rng(seed);
        std::vector<double> acc(static_cast<std::size_t>(cfg.classes), 0.0);
        for (int s = 0; s < eval_samples; ++s) {
          Tensor eps = tape.constant_vector(rng.normal_vector(post.dim()));
          Tensor z = sample(tape, post, eps);
          auto p = softmax_values(vib_clf.logits(tape, z).value());
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
        }
        for (double& x : acc) x /= static_cast<double>(eval_samples);
        out.probs = std::move(acc);
      }
      break;
    }
    case PredictMode::VibTc: {
      GaussianPosterior post = forward_gaussian(tape, tokens);
      std::vector<double> acc(static_cast<std::size_t>(cfg.classes), 0.0);
      if (eval_samples <= 0) {
        for (std::size_t i = 0; i < head_clf.size(); ++i) {
          const HeadRange& r = post.head_partition[i];
          auto p = softmax_values(
              head_clf[i].logits(tape, tape.slice(post.mean, r.lo, r.hi)).value());
          for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
        }
        for (double& x : acc) x /= static_cast<double>(head_clf.size());
      } else {
        Rng rng(seed);
        for (int s = 0; s < eval_samples; ++s) {
          Tensor eps = tape.constant_vector(rng.normal_vector(post.dim()));
          Tensor z = sample(tape, post, eps);
          for (std::size_t i = 0; i < head_clf.size(); ++i) {
            const HeadRange& r = post.head_partition[i];
            auto p = softmax_values(
                head_clf[i].logits(tape, tape.slice(z, r.lo, r.hi)).value());
            for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
          }
        }
        const double norm = static_cast<double>(eval_samples) *
                            static_cast<double>(head_clf.size());
        for (double& x : acc) x /= norm;
      }
      out.probs = std::move(acc);
      break;
    }
    default:
      throw ContractError("predict: unknown mode");
  }
  out.label = argmax(out.probs);
  return out;
}

Prediction Model::predict(std::span<const int> tokens, int eval_samples,
                          std::uint64_t seed) const {
  switch (cfg.family) {
    case Family::Baseline:
    case Family::Regularizer:
      return predict_mode(PredictMode::Regularizer, tokens, eval_samples, seed);
    case Family::Vib:
      return predict_mode(PredictMode::Vib, tokens, eval_samples, seed);
    case Family::VibTc:
      return predict_mode(PredictMode::VibTc, tokens, eval_samples, seed);
  }
  throw ContractError("predict: unknown family");
}

std::vector<Array*> Model::parameters() {
  std::vector<Array*> p;
  if (cfg.train_embeddings) p.push_back(&embeddings);
  for (Array* a : encoder.parameters()) p.push_back(a);
  if (cfg.family == Family::Baseline || cfg.family == Family::Regularizer) {
    for (Array& a : projector.w) p.push_back(&a);
    p.push_back(&clf_w);
    p.push_back(&attn);
  } else {
    for (Array* a : stoch.parameters()) p.push_back(a);
    if (cfg.family == Family::Vib) {
      for (Array* a : vib_clf.parameters()) p.push_back(a);
    } else {
      for (LinearClassifier& c : head_clf)
        for (Array* a : c.parameters()) p.push_back(a);
    }
  }
  return p;
}

std::vector<Array*> Model::all_arrays() {
  std::vector<Array*> p;
  p.push_back(&embeddings);
  for (Array* a : encoder.parameters()) p.push_back(a);
  if (cfg.family == Family::Baseline || cfg.family == Family::Regularizer) {
    for (Array& a : projector.w) p.push_back(&a);
    p.push_back(&clf_w);
    p.push_back(&attn);
  } else {
    for (Array* a : stoch.parameters()) p.push_back(a);
    if (cfg.family == Family::Vib) {
      for (Array* a : vib_clf.parameters()) p.push_back(a);
    } else {
      for (LinearClassifier& c : head_clf)
        for (Array* a : c.parameters()) p.push_back(a);
    }
  }
  return p;
}

std::vector<const Array*> Model::all_arrays() const {
  auto mut = const_cast<Model*>(this)->all_arrays();
  return {mut.begin(), mut.end()};
}

}  // namespace disent
