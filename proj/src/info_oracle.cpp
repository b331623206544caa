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

#include "disent/info_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "disent/common.hpp"
#include "disent/linalg.hpp"

namespace disent::oracle {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
}

DiscreteJoint DiscreteJoint::random(std::size_t nx, std::size_t ny,
                                    std::size_t nz, Rng& rng) {
  DiscreteJoint j;
  j.nx = nx;
  j.ny = ny;
  j.nz = nz;
  j.p.resize(nx * ny * nz);
  // Dirichlet(1) over the flattened table: normalized Exp(1) draws.
  double total = 0.0;
  for (double& v : j.p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (double& v : j.p) v /= total;
  return j;
}

void DiscreteJoint::validate() const {
  if (nx == 0 || ny == 0 || nz == 0 || p.size() != nx * ny * nz)
    throw ContractError("discrete joint: inconsistent support sizes");
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v))
      throw ContractError("discrete joint: negative or non-finite entry");
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw ContractError("discrete joint: total mass " + std::to_string(total) +
                        " != 1 within 1e-12");
}

std::vector<double> DiscreteJoint::marginal_x() const {
  std::vector<double> m(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[x] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::marginal_y() const {
  std::vector<double> m(ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[y] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::marginal_z() const {
  std::vector<double> m(nz, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[z] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::joint_xy() const {
  std::vector<double> m(nx * ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[x * ny + y] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::joint_zy() const {
  std::vector<double> m(nz * ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[z * ny + y] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::joint_zx() const {
  std::vector<double> m(nz * nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) m[z * nx + x] += at(x, y, z);
  return m;
}

std::vector<double> DiscreteJoint::conditional_y_given_z() const {
  std::vector<double> zy = joint_zy();
  std::vector<double> pz = marginal_z();
  std::vector<double> q(nz * ny, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    if (pz[z] == 0.0) {
      // undefined conditional; spread uniformly so rows stay stochastic
      for (std::size_t y = 0; y < ny; ++y)
        q[z * ny + y] = 1.0 / static_cast<double>(ny);
      continue;
    }
    for (std::size_t y = 0; y < ny; ++y) q[z * ny + y] = zy[z * ny + y] / pz[z];
  }
  return q;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double mutual_information(std::span<const double> joint, std::size_t na,
                          std::size_t nb) {
  if (joint.size() != na * nb)
    throw ContractError("mutual_information: table size mismatch");
  double total = 0.0;
  std::vector<double> pa(na, 0.0), pb(nb, 0.0);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = joint[a * nb + b];
      if (v < 0.0 || !std::isfinite(v))
        throw ContractError("mutual_information: invalid table entry");
      pa[a] += v;
      pb[b] += v;
      total += v;
    }
  if (std::fabs(total - 1.0) > 1e-12)
    throw ContractError("mutual_information: table mass != 1");
  double mi = 0.0;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = joint[a * nb + b];
      if (v > 0.0) mi += v * std::log(v / (pa[a] * pb[b]));
    }
  return mi;
}

double vib_lower_bound(const DiscreteJoint& joint, std::span<const double> q) {
  joint.validate();
  if (q.size() != joint.nz * joint.ny)
    throw ContractError("vib_lower_bound: q table must be [nz x ny]");
  for (std::size_t z = 0; z < joint.nz; ++z) {
    double row = 0.0;
    for (std::size_t y = 0; y < joint.ny; ++y) row += q[z * joint.ny + y];
    if (std::fabs(row - 1.0) > 1e-10)
      throw ContractError("vib_lower_bound: q row " + std::to_string(z) +
                          " sums to " + std::to_string(row));
  }
  const std::vector<double> py = joint.marginal_y();
  double acc = 0.0;
  for (std::size_t x = 0; x < joint.nx; ++x)
    for (std::size_t y = 0; y < joint.ny; ++y)
      for (std::size_t z = 0; z < joint.nz; ++z) {
        const double v = joint.at(x, y, z);
        if (v > 0.0) acc += v * std::log(q[z * joint.ny + y]);
      }
  return acc + entropy(py);
}

double vib_upper_bound(const DiscreteJoint& joint, std::span<const double> r) {
  joint.validate();
  if (r.size() != joint.nz)
    throw ContractError("vib_upper_bound: r must be a distribution over z");
  double mass = 0.0;
  for (double v : r) mass += v;
  if (std::fabs(mass - 1.0) > 1e-10)
    throw ContractError("vib_upper_bound: r sums to " + std::to_string(mass));
  const std::vector<double> px = joint.marginal_x();
  const std::vector<double> zx = joint.joint_zx();
  double acc = 0.0;
  for (std::size_t x = 0; x < joint.nx; ++x) {
    if (px[x] == 0.0) continue;
    for (std::size_t z = 0; z < joint.nz; ++z) {
      const double pxz = zx[z * joint.nx + x];  // p(x, z)
      if (pxz == 0.0) continue;
      const double pz_given_x = pxz / px[x];
      acc += pxz * std::log(pz_given_x / r[z]);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Gaussian Monte-Carlo oracle
// ---------------------------------------------------------------------------

GaussianDist GaussianDist::standard(std::size_t n) {
  GaussianDist g;
  g.mean.assign(n, 0.0);
  g.chol.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g.chol[i * n + i] = 1.0;
  return g;
}

GaussianDist GaussianDist::diagonal(std::vector<double> mean,
                                    std::span<const double> scale) {
  const std::size_t n = mean.size();
  if (scale.size() != n)
    throw ContractError("gaussian: mean/scale length mismatch");
  GaussianDist g;
  g.mean = std::move(mean);
  g.chol.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (scale[i] <= 0.0) throw ContractError("gaussian: nonpositive scale");
    g.chol[i * n + i] = scale[i];
  }
  return g;
}

GaussianDist GaussianDist::from_posterior(const GaussianPosterior& post) {
  const std::size_t n = post.dim();
  GaussianDist g;
  g.mean.assign(post.mean.value().begin(), post.mean.value().end());
  if (post.joint()) {
    g.chol.assign(post.joint_factor->value().begin(),
                  post.joint_factor->value().end());
  } else {
    g.chol.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      g.chol[i * n + i] = post.scale.value()[i];
  }
  return g;
}

double GaussianDist::log_density(std::span<const double> x) const {
  const std::size_t n = dim();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - mean[i];
  std::vector<double> y;
  la::solve_lower(chol, n, diff, y);
  double quad = 0.0;
  for (double v : y) quad += v * v;
  const double logdet = la::logdet_from_cholesky(chol, n);
  return -0.5 * (static_cast<double>(n) * kLog2Pi + logdet + quad);
}

std::vector<double> GaussianDist::sample_one(Rng& rng) const {
  const std::size_t n = dim();
  std::vector<double> eps(n);
  rng.normal_fill(eps);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = mean[i];
    for (std::size_t j = 0; j <= i; ++j) s += chol[i * n + j] * eps[j];
    out[i] = s;
  }
  return out;
}

GaussianDist GaussianDist::product_of_marginals(
    std::span<const HeadRange> parts) const {
  const std::size_t n = dim();
  std::vector<double> cov = la::aat(chol, n);
  GaussianDist g;
  g.mean = mean;
  g.chol.assign(n * n, 0.0);
  for (const HeadRange& r : parts) {
    const std::size_t w = r.width();
    std::vector<double> blockcov(w * w);
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j)
        blockcov[i * w + j] = cov[(r.lo + i) * n + (r.lo + j)];
    std::vector<double> blockchol;
    if (!la::cholesky_lower(blockcov, w, blockchol))
      throw ContractError("product_of_marginals: block not positive definite");
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        g.chol[(r.lo + i) * n + (r.lo + j)] = blockchol[i * w + j];
  }
  return g;
}

McEstimate mc_kl_gaussian(const GaussianDist& a, const GaussianDist& b,
                          std::size_t n, std::uint64_t seed) {
  if (n < 1000)
    throw ContractError("mc_kl_gaussian: need at least 10^3 samples");
  if (a.dim() != b.dim())
    throw ContractError("mc_kl_gaussian: dimension mismatch");
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> x = a.sample_one(rng);
    const double r = a.log_density(x) - b.log_density(x);
    sum += r;
    sum_sq += r * r;
  }
  McEstimate e;
  e.n = n;
  e.value = sum / static_cast<double>(n);
  const double var =
      (sum_sq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
  e.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  return e;
}

McEstimate mc_tc_gaussian(const GaussianDist& a,
                          std::span<const HeadRange> parts, std::size_t n,
                          std::uint64_t seed) {
  return mc_kl_gaussian(a, a.product_of_marginals(parts), n, seed);
}

}  // namespace disent::oracle
