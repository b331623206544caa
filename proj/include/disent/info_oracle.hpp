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

// Exact information-theoretic computations on small enumerable joints, plus
// Monte-Carlo KL estimators for Gaussians. Everything here is pure numerics
// in nats (0 ln 0 := 0) and serves as the independent oracle for the
// variational bounds and the closed-form KL/TC terms.

#ifndef DISENT_INFO_ORACLE_HPP_
#define DISENT_INFO_ORACLE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "disent/encoder.hpp"
#include "disent/rng.hpp"

namespace disent::oracle {

// Dense joint p(x, y, z), x-major then y then z.
struct DiscreteJoint {
  std::size_t nx = 0, ny = 0, nz = 0;
  std::vector<double> p;

  static DiscreteJoint random(std::size_t nx, std::size_t ny, std::size_t nz,
                              Rng& rng);  // symmetric Dirichlet(1)
  void validate() const;

  double& at(std::size_t x, std::size_t y, std::size_t z) {
    return p[(x * ny + y) * nz + z];
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return p[(x * ny + y) * nz + z];
  }

  std::vector<double> marginal_x() const;
  std::vector<double> marginal_y() const;
  std::vector<double> marginal_z() const;
  std::vector<double> joint_xy() const;  // [nx x ny]
  std::vector<double> joint_zy() const;  // [nz x ny]
  std::vector<double> joint_zx() const;  // [nz x nx]
  std::vector<double> conditional_y_given_z() const;  // rows z, cols y
};

double entropy(std::span<const double> p);

// I(A;B) over a dense [na x nb] pairwise table.
double mutual_information(std::span<const double> joint, std::size_t na,
                          std::size_t nb);

// sum_{x,y,z} p(x,y,z) ln q(y|z) + H(Y); q is row-stochastic [nz x ny].
// Never exceeds the exact I(Z;Y).
double vib_lower_bound(const DiscreteJoint& joint, std::span<const double> q);

// sum_{x,z} p(x) p(z|x) ln[p(z|x)/r(z)]; r is a distribution over z.
// Never falls below the exact I(Z;X).
double vib_upper_bound(const DiscreteJoint& joint, std::span<const double> r);

// Plain-number Gaussian with a lower-triangular covariance factor.
struct GaussianDist {
  std::vector<double> mean;
  std::vector<double> chol;  // [n x n], lower triangular, positive diagonal

  static GaussianDist standard(std::size_t n);
  static GaussianDist diagonal(std::vector<double> mean,
                               std::span<const double> scale);
  static GaussianDist from_posterior(const GaussianPosterior& post);

  std::size_t dim() const { return mean.size(); }
  double log_density(std::span<const double> x) const;
  std::vector<double> sample_one(Rng& rng) const;

  // Block-diagonal Gaussian built from this one's marginal blocks.
  GaussianDist product_of_marginals(std::span<const HeadRange> parts) const;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Unbiased KL(a || b) estimate via the sampled log-density ratio.
McEstimate mc_kl_gaussian(const GaussianDist& a, const GaussianDist& b,
                          std::size_t n, std::uint64_t seed);

// KL between the joint and the product of its head marginals.
McEstimate mc_tc_gaussian(const GaussianDist& a,
                          std::span<const HeadRange> parts, std::size_t n,
                          std::uint64_t seed);

}  // namespace disent::oracle

#endif  // DISENT_INFO_ORACLE_HPP_
