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

#include "disent/objectives.hpp"

#include <algorithm>

#include "disent/common.hpp"

namespace disent {

Tensor cross_entropy(Tape& tape, Tensor logits, int label) {
  if (logits.shape().rank != 1)
    throw DimensionError("cross_entropy: logits must be a vector, got " +
                         logits.shape().str());
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw ContractError("cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(logits.size()) +
                        " classes");
  return tape.neg(
      tape.pick(tape.log_softmax(logits), static_cast<std::size_t>(label)));
}

Tensor l2_disentangle(Tape& tape, std::span<const Tensor> zs) {
  if (zs.empty()) throw ContractError("l2_disentangle: K must be >= 1");
  const std::size_t width = zs[0].size();
  for (const Tensor& z : zs)
    if (z.shape().rank != 1 || z.size() != width)
      throw DimensionError("l2_disentangle: head width mismatch " +
                           zs[0].shape().str() + " vs " + z.shape().str());
  if (zs.size() == 1) return tape.constant(0.0);
  Tensor acc;
  bool first = true;
  for (std::size_t i = 0; i < zs.size(); ++i)
    for (std::size_t j = i + 1; j < zs.size(); ++j) {
      Tensor diff = tape.sub(zs[i], zs[j]);
      Tensor sq = tape.sum(tape.mul(diff, diff));
      acc = first ? sq : tape.add(acc, sq);
      first = false;
    }
  return acc;
}

LossBreakdown l_separate(Tape& tape, Tensor logits_combined, int label,
                         std::span<const Tensor> zs, double beta) {
  if (beta < 0.0) throw ContractError("l_separate: beta must be >= 0");
  LossBreakdown out;
  Tensor ce = cross_entropy(tape, logits_combined, label);
  Tensor reg = l2_disentangle(tape, zs);
  out.total = tape.add(ce, tape.scale(reg, beta));
  out.task = ce.scalar();
  out.reg_raw = reg.scalar();
  out.reg = beta * out.reg_raw;
  return out;
}

Tensor kl_diag_standard(Tape& tape, const GaussianPosterior& post) {
  if (post.joint())
    throw ContractError("kl_diag_standard: posterior is not diagonal");
  for (double s : post.scale.value())
    if (s <= 0.0)
      throw ContractError("kl_diag_standard: nonpositive scale entry");
  Tensor mu2 = tape.square(post.mean);
  Tensor s2 = tape.square(post.scale);
  Tensor term = tape.sub(tape.add_scalar(tape.add(mu2, s2), -1.0), tape.log(s2));
  return tape.scale(tape.sum(term), 0.5);
}

Tensor kl_block_standard(Tape& tape, Tensor mu, Tensor cov) {
  if (cov.shape().rank != 2 || cov.shape().rows() != cov.shape().cols() ||
      mu.shape().rank != 1 || mu.size() != cov.shape().rows())
    throw DimensionError("kl_block_standard: incompatible shapes " +
                         mu.shape().str() + " vs " + cov.shape().str());
  const double d = static_cast<double>(mu.size());
  Tensor tr = tape.trace(cov);
  Tensor quad = tape.dot(mu, mu);
  Tensor ld = tape.logdet_spd(cov);
  Tensor inner = tape.sub(tape.add_scalar(tape.add(tr, quad), -d), ld);
  return tape.scale(inner, 0.5);
}

Tensor gaussian_tc(Tape& tape, const GaussianPosterior& post) {
  if (!post.joint())
    throw ContractError("gaussian_tc: posterior has no joint factor");
  if (post.head_partition.empty())
    throw ContractError("gaussian_tc: head partition missing");
  Tensor l = *post.joint_factor;
  Tensor cov = tape.matmul(l, tape.transpose(l));
  Tensor block_sum;
  bool first = true;
  for (const HeadRange& r : post.head_partition) {
    Tensor ld = tape.logdet_spd(tape.block(cov, r.lo, r.hi, r.lo, r.hi));
    block_sum = first ? ld : tape.add(block_sum, ld);
    first = false;
  }
  Tensor joint_ld = tape.logdet_spd(cov);
  return tape.scale(tape.sub(block_sum, joint_ld), 0.5);
}

LossBreakdown l_vib_with_draws(Tape& tape, const GaussianPosterior& post,
                               const LinearClassifier& classifier, int label,
                               double beta,
                               std::span<const std::vector<double>> draws) {
  if (draws.empty()) throw ContractError("l_vib: need at least one draw");
  if (beta < 0.0) throw ContractError("l_vib: beta must be >= 0");
  LossBreakdown out;
  Tensor task_acc;
  bool first = true;
  for (const auto& d : draws) {
    Tensor eps = tape.constant_vector(d);
    Tensor z = sample(tape, post, eps);
    Tensor ce = cross_entropy(tape, classifier.logits(tape, z), label);
    task_acc = first ? ce : tape.add(task_acc, ce);
    first = false;
  }
  Tensor task = tape.scale(task_acc, 1.0 / static_cast<double>(draws.size()));
  Tensor kl = kl_diag_standard(tape, post);
  out.total = tape.add(task, tape.scale(kl, beta));
  out.task = task.scalar();
  out.kl_raw = kl.scalar();
  out.rate = beta * out.kl_raw;
  return out;
}

LossBreakdown l_vib(Tape& tape, const GaussianPosterior& post,
                    const LinearClassifier& classifier, int label, double beta,
                    int n_samples, Rng& rng) {
  if (n_samples < 1) throw ContractError("l_vib: n_samples must be >= 1");
  std::vector<std::vector<double>> draws;
  draws.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s)
    draws.push_back(rng.normal_vector(post.dim()));
  return l_vib_with_draws(tape, post, classifier, label, beta, draws);
}

LossBreakdown l_vib_tc_with_draws(Tape& tape, const GaussianPosterior& post,
                                  std::span<const LinearClassifier> heads,
                                  int label, double beta, double lambda_tc,
                                  std::span<const std::vector<double>> draws,
                                  bool head_mean) {
  if (!post.joint())
    throw ContractError("l_vib_tc: posterior has no joint factor");
  if (heads.size() != post.head_partition.size())
    throw ContractError("l_vib_tc: classifier count " +
                        std::to_string(heads.size()) +
                        " does not match head partition " +
                        std::to_string(post.head_partition.size()));
  if (draws.empty()) throw ContractError("l_vib_tc: need at least one draw");
  if (beta < 0.0 || lambda_tc < 0.0)
    throw ContractError("l_vib_tc: weights must be >= 0");

  LossBreakdown out;
  const std::size_t K = heads.size();
  const double inv_s = 1.0 / static_cast<double>(draws.size());

  std::vector<Tensor> zs;
  zs.reserve(draws.size());
  for (const auto& d : draws)
    zs.push_back(sample(tape, post, tape.constant_vector(d)));

  Tensor task_acc;
  bool first = true;
  for (std::size_t i = 0; i < K; ++i) {
    const HeadRange& r = post.head_partition[i];
    for (const Tensor& z : zs) {
      Tensor ce = cross_entropy(
          tape, heads[i].logits(tape, tape.slice(z, r.lo, r.hi)), label);
      task_acc = first ? ce : tape.add(task_acc, ce);
      first = false;
    }
  }
  double task_norm = inv_s * (head_mean ? 1.0 / static_cast<double>(K) : 1.0);
  Tensor task = tape.scale(task_acc, task_norm);

  Tensor l = *post.joint_factor;
  Tensor cov = tape.matmul(l, tape.transpose(l));
  Tensor rate_acc;
  first = true;
  for (const HeadRange& r : post.head_partition) {
    Tensor kl = kl_block_standard(tape, tape.slice(post.mean, r.lo, r.hi),
                                  tape.block(cov, r.lo, r.hi, r.lo, r.hi));
    rate_acc = first ? kl : tape.add(rate_acc, kl);
    first = false;
  }
  if (head_mean) rate_acc = tape.scale(rate_acc, 1.0 / static_cast<double>(K));

  Tensor tc = gaussian_tc(tape, post);

  out.total = tape.add(tape.add(task, tape.scale(rate_acc, beta)),
                       tape.scale(tc, lambda_tc));
  out.task = task.scalar();
  out.kl_raw = rate_acc.scalar();
  out.rate = beta * out.kl_raw;
  out.tc_raw = tc.scalar();
  out.tc = lambda_tc * out.tc_raw;
  return out;
}

LossBreakdown l_vib_tc(Tape& tape, const GaussianPosterior& post,
                       std::span<const LinearClassifier> heads, int label,
                       double beta, double lambda_tc, int n_samples, Rng& rng,
                       bool head_mean) {
  if (n_samples < 1) throw ContractError("l_vib_tc: n_samples must be >= 1");
  std::vector<std::vector<double>> draws;
  draws.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s)
    draws.push_back(rng.normal_vector(post.dim()));
  return l_vib_tc_with_draws(tape, post, heads, label, beta, lambda_tc, draws,
                             head_mean);
}

}  // namespace disent
