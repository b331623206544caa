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

#include <cmath>
#include <vector>

#include "doctest.h"

#include "disent/info_oracle.hpp"

using namespace disent;
using namespace disent::oracle;

TEST_CASE("mutual information basics") {
  SUBCASE("independent uniform pair") {
    std::vector<double> joint(4, 0.25);
    CHECK(mutual_information(joint, 2, 2) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("perfect copy channel") {
    std::vector<double> joint = {0.5, 0.0, 0.0, 0.5};
    CHECK(mutual_information(joint, 2, 2) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("chain rule cross-check on random 3x3 joints") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> joint(9);
      double total = 0.0;
      for (double& v : joint) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
      }
      for (double& v : joint) v /= total;
      // I(A;B) = H(A) - H(A|B)
      std::vector<double> pa(3, 0.0), pb(3, 0.0);
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
          pa[a] += joint[a * 3 + b];
          pb[b] += joint[a * 3 + b];
        }
      double h_a = entropy(pa);
      double h_a_given_b = 0.0;
      for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t a = 0; a < 3; ++a) {
          const double v = joint[a * 3 + b];
          if (v > 0.0) h_a_given_b -= v * std::log(v / pb[b]);
        }
      }
      CHECK(mutual_information(joint, 3, 3) ==
            doctest::Approx(h_a - h_a_given_b).epsilon(1e-12));
    }
  }
  SUBCASE("symmetry I(A;B) = I(B;A)") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t na = 2 + rng.integer(3), nb = 2 + rng.integer(3);
      std::vector<double> joint(na * nb);
      double total = 0.0;
      for (double& v : joint) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
      }
      for (double& v : joint) v /= total;
      std::vector<double> flipped(nb * na);
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b)
          flipped[b * na + a] = joint[a * nb + b];
      CHECK(std::fabs(mutual_information(joint, na, nb) -
                      mutual_information(flipped, nb, na)) <= 1e-12);
    }
  }
}

TEST_CASE("vib lower bound") {
  Rng rng(11);
  SUBCASE("tight at the true conditional") {
    for (int trial = 0; trial < 100; ++trial) {
      DiscreteJoint j = DiscreteJoint::random(3, 4, 3, rng);
      const double izy = mutual_information(j.joint_zy(), j.nz, j.ny);
      const double lb = vib_lower_bound(j, j.conditional_y_given_z());
      CHECK(std::fabs(lb - izy) <= 1e-12);
    }
  }
  SUBCASE("uniform q yields zero when Y is uniform") {
    // build a joint with uniform Y marginal: p(x,y,z) = p(y) * p(x,z|y) with
    // p(y) uniform by construction
    const std::size_t n = 2;
    DiscreteJoint j;
    j.nx = n;
    j.ny = 2;
    j.nz = n;
    j.p.assign(n * 2 * n, 0.0);
    for (std::size_t y = 0; y < 2; ++y) {
      double total = 0.0;
      std::vector<double> block(n * n);
      for (double& v : block) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
      }
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t z = 0; z < n; ++z)
          j.at(x, y, z) = 0.5 * block[x * n + z] / total;
    }
    std::vector<double> q(j.nz * j.ny, 0.5);
    CHECK(vib_lower_bound(j, q) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("never exceeds the exact mutual information") {
    for (int trial = 0; trial < 100; ++trial) {
      DiscreteJoint j = DiscreteJoint::random(4, 3, 4, rng);
      const double izy = mutual_information(j.joint_zy(), j.nz, j.ny);
      std::vector<double> q(j.nz * j.ny);
      for (std::size_t z = 0; z < j.nz; ++z) {
        double s = 0.0;
        for (std::size_t y = 0; y < j.ny; ++y) {
          q[z * j.ny + y] = -std::log(1.0 - rng.uniform());
          s += q[z * j.ny + y];
        }
        for (std::size_t y = 0; y < j.ny; ++y) q[z * j.ny + y] /= s;
      }
      CHECK(vib_lower_bound(j, q) <= izy + 1e-12);
    }
  }
  SUBCASE("unnormalized q rows are rejected") {
    DiscreteJoint j = DiscreteJoint::random(2, 2, 2, rng);
    std::vector<double> q = {0.5, 0.6, 0.5, 0.5};
    CHECK_THROWS_AS(vib_lower_bound(j, q), ContractError);
  }
}

TEST_CASE("vib upper bound") {
  Rng rng(13);
  SUBCASE("tight at the true marginal") {
    for (int trial = 0; trial < 100; ++trial) {
      DiscreteJoint j = DiscreteJoint::random(3, 3, 4, rng);
      const double izx = mutual_information(j.joint_zx(), j.nz, j.nx);
      CHECK(std::fabs(vib_upper_bound(j, j.marginal_z()) - izx) <= 1e-12);
    }
  }
  SUBCASE("never falls below the exact mutual information") {
    for (int trial = 0; trial < 100; ++trial) {
      DiscreteJoint j = DiscreteJoint::random(4, 3, 4, rng);
      const double izx = mutual_information(j.joint_zx(), j.nz, j.nx);
      std::vector<double> r(j.nz);
      double s = 0.0;
      for (double& v : r) {
        v = -std::log(1.0 - rng.uniform());
        s += v;
      }
      for (double& v : r) v /= s;
      CHECK(vib_upper_bound(j, r) >= izx - 1e-12);
    }
  }
  SUBCASE("uniform r decomposes as I(Z,X) + KL(p(z) || uniform)") {
    for (int trial = 0; trial < 50; ++trial) {
      DiscreteJoint j = DiscreteJoint::random(3, 2, 4, rng);
      const double izx = mutual_information(j.joint_zx(), j.nz, j.nx);
      std::vector<double> r(j.nz, 1.0 / static_cast<double>(j.nz));
      std::vector<double> pz = j.marginal_z();
      double kl = 0.0;
      for (std::size_t z = 0; z < j.nz; ++z)
        if (pz[z] > 0.0) kl += pz[z] * std::log(pz[z] / r[z]);
      CHECK(vib_upper_bound(j, r) == doctest::Approx(izx + kl).epsilon(1e-10));
      CHECK(vib_upper_bound(j, r) >= izx - 1e-12);
    }
  }
}

TEST_CASE("the full bound chain holds for any beta >= 0") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    DiscreteJoint j = DiscreteJoint::random(4, 4, 4, rng);
    const double izy = mutual_information(j.joint_zy(), j.nz, j.ny);
    const double izx = mutual_information(j.joint_zx(), j.nz, j.nx);
    std::vector<double> q(j.nz * j.ny);
    for (std::size_t z = 0; z < j.nz; ++z) {
      double s = 0.0;
      for (std::size_t y = 0; y < j.ny; ++y) {
        q[z * j.ny + y] = -std::log(1.0 - rng.uniform());
        s += q[z * j.ny + y];
      }
      for (std::size_t y = 0; y < j.ny; ++y) q[z * j.ny + y] /= s;
    }
    std::vector<double> r(j.nz);
    double s = 0.0;
    for (double& v : r) {
      v = -std::log(1.0 - rng.uniform());
      s += v;
    }
    for (double& v : r) v /= s;
    const double lb = vib_lower_bound(j, q);
    const double ub = vib_upper_bound(j, r);
    for (double beta : {0.0, 0.1, 1.0, 5.0})
      CHECK(izy - beta * izx >= lb - beta * ub - 1e-12);
  }
}

TEST_CASE("markov-factored joints satisfy I(X;Y) <= I(X;Z)") {
  // joints built as X -> Z -> Y: p(x, y, z) = p(x) p(z|x) p(y|z)
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nx = 3, nz = 3, ny = 3;
    auto random_dist = [&](std::size_t n) {
      std::vector<double> p(n);
      double s = 0.0;
      for (double& v : p) {
        v = -std::log(1.0 - rng.uniform());
        s += v;
      }
      for (double& v : p) v /= s;
      return p;
    };
    std::vector<double> px = random_dist(nx);
    std::vector<std::vector<double>> pz_x, py_z;
    for (std::size_t x = 0; x < nx; ++x) pz_x.push_back(random_dist(nz));
    for (std::size_t z = 0; z < nz; ++z) py_z.push_back(random_dist(ny));
    DiscreteJoint j;
    j.nx = nx;
    j.ny = ny;
    j.nz = nz;
    j.p.assign(nx * ny * nz, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y)
          j.at(x, y, z) = px[x] * pz_x[x][z] * py_z[z][y];
    const double ixy = mutual_information(j.joint_xy(), j.nx, j.ny);
    const double ixz_flipped = mutual_information(j.joint_zx(), j.nz, j.nx);
    CHECK(ixy <= ixz_flipped + 1e-10);
  }
}

TEST_CASE("mc_kl_gaussian sanity") {
  SUBCASE("identical distributions estimate zero") {
    GaussianDist a = GaussianDist::diagonal({0.3, -0.7}, std::vector<double>{0.9, 1.4});
    auto est = mc_kl_gaussian(a, a, 20000, 4);
    CHECK(std::fabs(est.value) <= 3.0 * std::max(est.std_error, 1e-12));
  }
  SUBCASE("needs at least a thousand samples") {
    GaussianDist a = GaussianDist::standard(2);
    CHECK_THROWS_AS(mc_kl_gaussian(a, a, 10, 1), ContractError);
  }
}

TEST_CASE("random joints validate and have unit mass") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    DiscreteJoint j = DiscreteJoint::random(4, 4, 4, rng);
    j.validate();
    double total = 0.0;
    for (double v : j.p) total += v;
    CHECK(std::fabs(total - 1.0) <= 1e-12);
  }
}
