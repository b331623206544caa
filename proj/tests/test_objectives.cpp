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
#include "disent/linalg.hpp"
#include "disent/objectives.hpp"

using namespace disent;

namespace {

GaussianPosterior diag_post(Tape& t, std::vector<double> mean,
                            std::vector<double> scale) {
  GaussianPosterior p;
  p.mean = t.constant_vector(std::move(mean));
  p.scale = t.constant_vector(std::move(scale));
  return p;
}

GaussianPosterior joint_post(Tape& t, std::vector<double> mean,
                             std::vector<double> chol, std::size_t heads) {
  GaussianPosterior p;
  const std::size_t d = mean.size();
  p.mean = t.constant_vector(std::move(mean));
  p.scale = t.constant_vector(std::vector<double>(d, 1.0));
  p.joint_factor = t.constant(Shape::matrix(d, d), std::move(chol));
  p.head_partition = make_head_partition(d, heads);
  return p;
}

std::vector<double> random_chol(std::size_t d, Rng& rng) {
  std::vector<double> l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) l[i * d + j] = rng.uniform(-0.8, 0.8);
    l[i * d + i] = rng.uniform(0.4, 1.6);
  }
  return l;
}

}  // namespace

TEST_CASE("cross entropy hand values") {
  Tape t;
  SUBCASE("uniform logits over four classes") {
    Tensor ce = cross_entropy(t, t.constant_vector({1.0, 1.0, 1.0, 1.0}), 2);
    CHECK(ce.scalar() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("large margin") {
    Tensor ce = cross_entropy(t, t.constant_vector({20.0, 0.0}), 0);
    CHECK(ce.scalar() == doctest::Approx(2.0611536e-9).epsilon(1e-4));
  }
  SUBCASE("follows the softmax example") {
    Tensor ce = cross_entropy(t, t.constant_vector({0.0, std::log(3.0)}), 1);
    CHECK(ce.scalar() == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  }
  SUBCASE("label out of range") {
    CHECK_THROWS_AS(cross_entropy(t, t.constant_vector({0.0, 1.0}), 2),
                    ContractError);
    CHECK_THROWS_AS(cross_entropy(t, t.constant_vector({0.0, 1.0}), -1),
                    ContractError);
  }
}

TEST_CASE("l2_disentangle hand values") {
  Tape t;
  SUBCASE("single head has no pairs") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 2.0})};
    CHECK(l2_disentangle(t, zs).scalar() == 0.0);
  }
  SUBCASE("two orthogonal unit heads") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 0.0}),
                              t.constant_vector({0.0, 1.0})};
    CHECK(l2_disentangle(t, zs).scalar() == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("three heads sum the pairs") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 0.0}),
                              t.constant_vector({0.0, 1.0}),
                              t.constant_vector({0.0, 0.0})};
    CHECK(l2_disentangle(t, zs).scalar() == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("width mismatch") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 0.0}),
                              t.constant_vector({1.0, 0.0, 0.0})};
    CHECK_THROWS_AS(l2_disentangle(t, zs), DimensionError);
  }
}

TEST_CASE("l2_disentangle is zero iff all heads coincide") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Tape t;
    const std::size_t k = 2 + rng.integer(3), d = 1 + rng.integer(4);
    std::vector<double> base(d);
    for (double& x : base) x = rng.uniform(-2.0, 2.0);
    const bool equal = trial % 2 == 0;
    std::vector<Tensor> zs;
    double max_pair_dist = 0.0;
    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> v = base;
      if (!equal && i + 1 == k) v[0] += rng.uniform(0.1, 1.0);
      raw.push_back(v);
      zs.push_back(t.constant_vector(v));
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        double dist = 0.0;
        for (std::size_t c = 0; c < d; ++c)
          dist += (raw[i][c] - raw[j][c]) * (raw[i][c] - raw[j][c]);
        max_pair_dist = std::max(max_pair_dist, dist);
      }
    const double reg = l2_disentangle(t, zs).scalar();
    CHECK(reg >= 0.0);
    CHECK((reg == 0.0) == (max_pair_dist == 0.0));
  }
}

TEST_CASE("l_separate composes cross entropy and the regularizer") {
  Tape t;
  Tensor logits = t.constant_vector({0.3, -0.7, 1.1});
  SUBCASE("beta zero reduces to cross entropy") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 0.0}),
                              t.constant_vector({0.0, 1.0})};
    LossBreakdown lb = l_separate(t, logits, 1, zs, 0.0);
    Tensor ce = cross_entropy(t, logits, 1);
    CHECK(lb.total_value() == ce.scalar());
    CHECK(lb.reg == 0.0);
  }
  SUBCASE("identical heads have zero regularizer for any beta") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 2.0}),
                              t.constant_vector({1.0, 2.0})};
    LossBreakdown lb = l_separate(t, logits, 0, zs, 3.7);
    CHECK(lb.reg == 0.0);
    CHECK(lb.reg_raw == 0.0);
  }
  SUBCASE("beta weighs the K=3 pair sum") {
    std::vector<Tensor> zs = {t.constant_vector({1.0, 0.0}),
                              t.constant_vector({0.0, 1.0}),
                              t.constant_vector({0.0, 0.0})};
    LossBreakdown lb = l_separate(t, logits, 2, zs, 0.1);
    CHECK(lb.reg == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(lb.total_value() ==
          doctest::Approx(lb.task + lb.reg).epsilon(1e-10));
  }
}

TEST_CASE("kl_diag_standard closed form") {
  Tape t;
  SUBCASE("standard posterior has zero divergence") {
    CHECK(kl_diag_standard(t, diag_post(t, {0.0, 0.0}, {1.0, 1.0})).scalar() ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("unit shift") {
    CHECK(kl_diag_standard(t, diag_post(t, {1.0, 0.0}, {1.0, 1.0})).scalar() ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("wide scale") {
    const double expect = 0.5 * (4.0 - 1.0 - std::log(4.0));
    CHECK(kl_diag_standard(t, diag_post(t, {0.0, 0.0}, {2.0, 1.0})).scalar() ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.806853).epsilon(1e-5));
  }
  SUBCASE("joint posterior is rejected") {
    GaussianPosterior p = joint_post(t, {0.0, 0.0}, {1, 0, 0, 1}, 2);
    CHECK_THROWS_AS(kl_diag_standard(t, p), ContractError);
  }
}

TEST_CASE("kl_diag_standard matches monte carlo") {
  using oracle::GaussianDist;
  using oracle::mc_kl_gaussian;
  SUBCASE("unit shift case") {
    GaussianDist a = GaussianDist::diagonal({1.0, 0.0}, std::vector<double>{1.0, 1.0});
    auto est = mc_kl_gaussian(a, GaussianDist::standard(2), 100000, 99);
    CHECK(std::fabs(est.value - 0.5) <= 3.0 * est.std_error);
  }
  SUBCASE("wide scale case") {
    GaussianDist a = GaussianDist::diagonal({0.0, 0.0}, std::vector<double>{2.0, 1.0});
    auto est = mc_kl_gaussian(a, GaussianDist::standard(2), 100000, 100);
    CHECK(std::fabs(est.value - 0.806853) <= 3.0 * est.std_error);
  }
}

TEST_CASE("kl_diag_standard is zero exactly at the standard normal") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    Tape t;
    const std::size_t d = 1 + rng.integer(4);
    std::vector<double> mu(d, 0.0), sc(d, 1.0);
    const bool standard = trial % 2 == 0;
    if (!standard) {
      mu[rng.integer(d)] += rng.uniform(0.2, 1.0);
      sc[rng.integer(d)] *= rng.uniform(1.2, 2.0);
    }
    const double kl = kl_diag_standard(t, diag_post(t, mu, sc)).scalar();
    CHECK(kl >= -1e-15);
    if (standard)
      CHECK(std::fabs(kl) <= 1e-10);
    else
      CHECK(kl > 1e-10);
  }
}

TEST_CASE("l_vib composes task and rate terms") {
  Rng rng(4);
  LinearClassifier clf = LinearClassifier::init(3, 2, rng);
  SUBCASE("noiseless beta zero equals plain cross entropy at the mean") {
    Tape t;
    GaussianPosterior p = diag_post(t, {0.4, -0.2}, {1e-9, 1e-9});
    std::vector<std::vector<double>> zero = {{0.0, 0.0}};
    LossBreakdown lb = l_vib_with_draws(t, p, clf, 1, 0.0, zero);
    Tensor ce = cross_entropy(t, clf.logits(t, p.mean), 1);
    CHECK(lb.total_value() == doctest::Approx(ce.scalar()).epsilon(1e-12));
    CHECK(lb.rate == 0.0);
  }
  SUBCASE("standard posterior has zero rate for any beta") {
    Tape t;
    GaussianPosterior p = diag_post(t, {0.0, 0.0}, {1.0, 1.0});
    Rng draws(5);
    LossBreakdown lb = l_vib(t, p, clf, 0, 7.3, 4, draws);
    CHECK(lb.rate == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("one draw and many draws estimate the same expectation") {
    // 200 repetitions of each estimator; their means agree within 3 SE
    std::vector<double> mu = {0.3, -0.6};
    std::vector<double> sc = {0.8, 1.3};
    auto run = [&](int n_samples, std::uint64_t seed) {
      Rng draws(seed);
      std::vector<double> vals;
      for (int rep = 0; rep < 200; ++rep) {
        Tape t;
        GaussianPosterior p = diag_post(t, mu, sc);
        LossBreakdown lb = l_vib(t, p, clf, 1, 0.0, n_samples, draws);
        vals.push_back(lb.task);
      }
      return vals;
    };
    auto stats = [](const std::vector<double>& v) {
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size() - 1);
      return std::pair<double, double>(mean, var / static_cast<double>(v.size()));
    };
    auto [m1, se1sq] = stats(run(1, 11));
    auto [m64, se64sq] = stats(run(64, 12));
    CHECK(std::fabs(m1 - m64) <= 3.0 * std::sqrt(se1sq + se64sq));
  }
}

TEST_CASE("gaussian_tc closed form") {
  Tape t;
  SUBCASE("diagonal factor means independent heads") {
    GaussianPosterior p =
        joint_post(t, {0.0, 0.0, 0.0, 0.0},
                   {0.7, 0, 0, 0, 0, 1.3, 0, 0, 0, 0, 0.5, 0, 0, 0, 0, 1.1}, 2);
    CHECK(gaussian_tc(t, p).scalar() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("rho = 0.5 between two scalar heads") {
    // chol of [[1, .5], [.5, 1]]
    const double c = std::sqrt(1.0 - 0.25);
    GaussianPosterior p = joint_post(t, {0.0, 0.0}, {1.0, 0.0, 0.5, c}, 2);
    const double expect = -0.5 * std::log(0.75);
    CHECK(gaussian_tc(t, p).scalar() == doctest::Approx(expect).epsilon(1e-10));
    CHECK(expect == doctest::Approx(0.143841).epsilon(1e-5));
  }
  SUBCASE("rejects a diagonal posterior") {
    GaussianPosterior p = diag_post(t, {0.0}, {1.0});
    CHECK_THROWS_AS(gaussian_tc(t, p), ContractError);
  }
}

TEST_CASE("gaussian_tc matches a monte-carlo KL to the product of marginals") {
  using oracle::GaussianDist;
  const double c = std::sqrt(1.0 - 0.25);
  GaussianDist g;
  g.mean = {0.0, 0.0};
  g.chol = {1.0, 0.0, 0.5, c};
  auto parts = make_head_partition(2, 2);
  auto est = oracle::mc_tc_gaussian(g, parts, 100000, 7);
  CHECK(std::fabs(est.value - 0.143841) <= 3.0 * est.std_error);
}

TEST_CASE("gaussian_tc is invariant under consistent head permutation") {
  Rng rng(9);
  const std::size_t d = 4, k = 2;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> chol = random_chol(d, rng);
    std::vector<double> cov = la::aat(chol, d);
    // swap the two head blocks: permutation (2,3,0,1)
    std::vector<std::size_t> perm = {2, 3, 0, 1};
    std::vector<double> cov_p(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov_p[i * d + j] = cov[perm[i] * d + perm[j]];
    std::vector<double> chol_p;
    REQUIRE(la::cholesky_lower(cov_p, d, chol_p));

    Tape t;
    GaussianPosterior a = joint_post(t, std::vector<double>(d, 0.0), chol, k);
    GaussianPosterior b = joint_post(t, std::vector<double>(d, 0.0), chol_p, k);
    CHECK(gaussian_tc(t, a).scalar() ==
          doctest::Approx(gaussian_tc(t, b).scalar()).epsilon(1e-9));
  }
}

TEST_CASE("gaussian_tc nonnegative on random factors, zero when off-blocks vanish") {
  Rng rng(29);
  const std::size_t d = 4, k = 2;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> chol = random_chol(d, rng);
    Tape t;
    GaussianPosterior p = joint_post(t, std::vector<double>(d, 0.0), chol, k);
    CHECK(gaussian_tc(t, p).scalar() >= -1e-12);

    // zero the off-block rows of the factor: L becomes block diagonal, so the
    // covariance is block diagonal as well
    std::vector<double> blocked = chol;
    for (std::size_t i = 2; i < 4; ++i)
      for (std::size_t j = 0; j < 2; ++j) blocked[i * d + j] = 0.0;
    GaussianPosterior pb = joint_post(t, std::vector<double>(d, 0.0), blocked, k);
    CHECK(std::fabs(gaussian_tc(t, pb).scalar()) <= 1e-10);
  }
}

TEST_CASE("block KL against the standard normal") {
  Tape t;
  SUBCASE("hand value for a 2x2 block") {
    Tensor mu = t.constant_vector({0.0, 0.0});
    Tensor cov = t.constant(Shape::matrix(2, 2), {2.0, 0.0, 0.0, 2.0});
    const double expect = 0.5 * (4.0 - 2.0 - 2.0 * std::log(2.0));
    CHECK(kl_block_standard(t, mu, cov).scalar() ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.306853).epsilon(1e-5));
  }
  SUBCASE("monte-carlo cross check") {
    using oracle::GaussianDist;
    GaussianDist a = GaussianDist::diagonal(
        {0.0, 0.0}, std::vector<double>{std::sqrt(2.0), std::sqrt(2.0)});
    auto est = oracle::mc_kl_gaussian(a, GaussianDist::standard(2), 100000, 3);
    CHECK(std::fabs(est.value - 0.306853) <= 3.0 * est.std_error);
  }
}

TEST_CASE("l_vib_tc composes per-head terms and the tc penalty") {
  Rng rng(41);
  const std::size_t d = 4, k = 2;
  std::vector<LinearClassifier> heads;
  for (std::size_t i = 0; i < k; ++i)
    heads.push_back(LinearClassifier::init(2, 2, rng, "h" + std::to_string(i)));

  SUBCASE("block-diagonal factor with lambda zero equals per-head vib sum") {
    std::vector<double> chol = {0.9, 0, 0, 0, 0.2, 1.1, 0, 0,
                                0,   0, 0.8, 0, 0,   0, -0.4, 1.2};
    std::vector<double> mean = {0.3, -0.5, 0.8, 0.1};
    std::vector<std::vector<double>> draws = {{0.5, -1.0, 0.25, 0.75},
                                              {-0.3, 0.6, -0.9, 0.4}};
    Tape t;
    GaussianPosterior p = joint_post(t, mean, chol, k);
    const double beta = 0.7;
    LossBreakdown lb = l_vib_tc_with_draws(t, p, heads, 1, beta, 0.0, draws);
    CHECK(lb.tc == 0.0);

    // independent per-head reconstruction with the same draws
    double expect_task = 0.0, expect_kl = 0.0;
    auto parts = make_head_partition(d, k);
    Tensor cov = t.matmul(*p.joint_factor, t.transpose(*p.joint_factor));
    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = parts[i];
      for (const auto& eps : draws) {
        Tape t2;
        GaussianPosterior ph;
        ph.mean = t2.constant_vector(
            std::vector<double>(mean.begin() + r.lo, mean.begin() + r.hi));
        std::vector<double> block(2 * 2);
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            block[a * 2 + b] = chol[(r.lo + a) * d + (r.lo + b)];
        ph.scale = t2.constant_vector({1.0, 1.0});
        ph.joint_factor = t2.constant(Shape::matrix(2, 2), block);
        ph.head_partition = make_head_partition(2, 1);
        Tensor z = sample(t2, ph, t2.constant_vector(std::vector<double>(
                                      eps.begin() + r.lo, eps.begin() + r.hi)));
        expect_task +=
            cross_entropy(t2, heads[i].logits(t2, z), 1).scalar() / 2.0;
      }
      Tape t3;
      Tensor mu_i = t3.constant_vector(
          std::vector<double>(mean.begin() + r.lo, mean.begin() + r.hi));
      std::vector<double> blockcov(2 * 2);
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          blockcov[a * 2 + b] = cov.value()[(r.lo + a) * d + (r.lo + b)];
      expect_kl +=
          kl_block_standard(t3, mu_i, t3.constant(Shape::matrix(2, 2), blockcov))
              .scalar();
    }
    CHECK(lb.task == doctest::Approx(expect_task).epsilon(1e-10));
    CHECK(lb.kl_raw == doctest::Approx(expect_kl).epsilon(1e-10));
    CHECK(lb.total_value() ==
          doctest::Approx(expect_task + beta * expect_kl).epsilon(1e-10));
  }

  SUBCASE("noiseless degenerate case sums per-head cross entropies at the mean") {
    std::vector<double> chol = {1, 0, 0, 0, 0, 1, 0, 0,
                                0, 0, 1, 0, 0, 0, 0, 1};
    std::vector<double> mean = {0.5, -0.1, 0.2, 0.9};
    std::vector<std::vector<double>> zero = {std::vector<double>(d, 0.0)};
    Tape t;
    GaussianPosterior p = joint_post(t, mean, chol, k);
    LossBreakdown lb = l_vib_tc_with_draws(t, p, heads, 0, 0.0, 0.0, zero);
    double expect = 0.0;
    auto parts = make_head_partition(d, k);
    for (std::size_t i = 0; i < k; ++i) {
      Tensor mu_i = t.constant_vector(std::vector<double>(
          mean.begin() + parts[i].lo, mean.begin() + parts[i].hi));
      expect += cross_entropy(t, heads[i].logits(t, mu_i), 0).scalar();
    }
    CHECK(lb.total_value() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("loss breakdown reconstructs from parts") {
  Rng rng(77);
  LinearClassifier clf = LinearClassifier::init(3, 4, rng);
  Rng draws(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    std::vector<double> mu(4), sc(4);
    for (double& x : mu) x = draws.uniform(-1.0, 1.0);
    for (double& x : sc) x = draws.uniform(0.3, 2.0);
    GaussianPosterior p = diag_post(t, mu, sc);
    LossBreakdown lb = l_vib(t, p, clf, trial % 3, 0.25, 2, draws);
    CHECK(lb.task >= 0.0);
    CHECK(lb.rate >= 0.0);
    CHECK(std::fabs(lb.total_value() - (lb.task + lb.rate + lb.tc + lb.reg)) <=
          1e-10);
  }
}

TEST_CASE("losses pass the gradient check") {
  Rng rng(55);
  const double h = 1e-5, rtol = 1e-4;

  SUBCASE("kl_diag_standard") {
    Array mu("mu", Shape::vector(3)), sc("sc", Shape::vector(3));
    for (double& x : mu.value) x = rng.uniform(-1.0, 1.0);
    for (double& x : sc.value) x = rng.uniform(0.4, 1.8);
    Array* leaves[] = {&mu, &sc};
    auto f = [&](Tape& t) {
      GaussianPosterior p;
      p.mean = t.leaf(mu);
      p.scale = t.leaf(sc);
      return kl_diag_standard(t, p);
    };
    auto rep = check_gradients(f, leaves, h, rtol);
    CHECK_MESSAGE(rep.ok, "kl max rel err ", rep.max_rel_err);
  }
  SUBCASE("gaussian_tc") {
    const std::size_t d = 4;
    Array off("off", Shape::vector(d * (d - 1) / 2)), diag("diag", Shape::vector(d));
    for (double& x : off.value) x = rng.uniform(-0.5, 0.5);
    for (double& x : diag.value) x = rng.uniform(-0.5, 0.5);
    Array* leaves[] = {&off, &diag};
    auto f = [&](Tape& t) {
      GaussianPosterior p;
      p.mean = t.constant_vector(std::vector<double>(d, 0.0));
      p.scale = t.constant_vector(std::vector<double>(d, 1.0));
      p.joint_factor = t.add(t.diag_embed(t.softplus(t.leaf(diag))),
                             t.scatter_strict_lower(t.leaf(off), d));
      p.head_partition = make_head_partition(d, 2);
      return gaussian_tc(t, p);
    };
    auto rep = check_gradients(f, leaves, h, rtol);
    CHECK_MESSAGE(rep.ok, "tc max rel err ", rep.max_rel_err);
  }
}

TEST_CASE("positive logit scaling preserves every head argmax") {
  Rng rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t tcls = 2 + rng.integer(4);
    std::vector<double> logits(tcls);
    for (double& x : logits) x = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(0.1, 10.0);
    std::size_t arg1 = 0, arg2 = 0;
    for (std::size_t i = 1; i < tcls; ++i) {
      if (logits[i] > logits[arg1]) arg1 = i;
      if (c * logits[i] > c * logits[arg2]) arg2 = i;
    }
    CHECK(arg1 == arg2);
  }
}
