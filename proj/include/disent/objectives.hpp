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

// Loss terms, all in nats: cross entropy, the pairwise L2 head regularizer,
// closed-form Gaussian KL against a standard normal (diagonal and
// full-covariance block forms), Gaussian total correlation, and the three
// composite objectives.

#ifndef DISENT_OBJECTIVES_HPP_
#define DISENT_OBJECTIVES_HPP_

#include <span>
#include <vector>

#include "disent/encoder.hpp"
#include "disent/ensemble.hpp"

namespace disent {

struct LossBreakdown {
  Tensor total;
  // weighted terms; total == task + rate + tc + reg (sign per composition)
  double task = 0.0;
  double rate = 0.0;  // beta * KL
  double tc = 0.0;    // lambda * total correlation
  double reg = 0.0;   // beta * pairwise L2
  // unweighted values
  double kl_raw = 0.0;
  double tc_raw = 0.0;
  double reg_raw = 0.0;

  double total_value() const { return total.scalar(); }
};

// -log softmax(logits)[label], >= 0.
Tensor cross_entropy(Tape& tape, Tensor logits, int label);

// sum_{i<j} ||z_i - z_j||^2 over unordered pairs; zero iff all equal.
Tensor l2_disentangle(Tape& tape, std::span<const Tensor> zs);

// total = cross_entropy + beta * l2_disentangle.
LossBreakdown l_separate(Tape& tape, Tensor logits_combined, int label,
                         std::span<const Tensor> zs, double beta);

// 0.5 sum_j (mu_j^2 + sigma_j^2 - 1 - ln sigma_j^2). Diagonal posteriors only.
Tensor kl_diag_standard(Tape& tape, const GaussianPosterior& post);

// KL( N(mu, cov) || N(0, I) ) = 0.5 (tr cov + mu.mu - d - ln det cov).
Tensor kl_block_standard(Tape& tape, Tensor mu, Tensor cov);

// TC = 0.5 (sum_i ln det S_ii - ln det S), S = L L^T over the head partition.
Tensor gaussian_tc(Tape& tape, const GaussianPosterior& post);

// VIB objective with explicit reparameterization draws (one eps per sample).
LossBreakdown l_vib_with_draws(Tape& tape, const GaussianPosterior& post,
                               const LinearClassifier& classifier, int label,
                               double beta,
                               std::span<const std::vector<double>> draws);
LossBreakdown l_vib(Tape& tape, const GaussianPosterior& post,
                    const LinearClassifier& classifier, int label, double beta,
                    int n_samples, Rng& rng);

// VIB+TC objective: per-head task terms and marginal KLs plus the TC penalty.
// head_mean averages the per-head sums instead of summing.
LossBreakdown l_vib_tc_with_draws(Tape& tape, const GaussianPosterior& post,
                                  std::span<const LinearClassifier> heads,
                                  int label, double beta, double lambda_tc,
                                  std::span<const std::vector<double>> draws,
                                  bool head_mean = false);
LossBreakdown l_vib_tc(Tape& tape, const GaussianPosterior& post,
                       std::span<const LinearClassifier> heads, int label,
                       double beta, double lambda_tc, int n_samples, Rng& rng,
                       bool head_mean = false);

}  // namespace disent

#endif  // DISENT_OBJECTIVES_HPP_
