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

#include "disent/encoder.hpp"
#include "disent/linalg.hpp"
#include "disent/vocab.hpp"

using namespace disent;

namespace {

Array random_embeddings(int vocab, int dim, Rng& rng) {
  Array emb("emb", Shape::matrix(vocab, dim));
  for (double& x : emb.value) x = rng.uniform(-1.0, 1.0);
  return emb;
}

GaussianPosterior make_diag_posterior(Tape& t, std::vector<double> mean,
                                      std::vector<double> scale) {
  GaussianPosterior p;
  p.mean = t.constant_vector(std::move(mean));
  p.scale = t.constant_vector(std::move(scale));
  return p;
}

GaussianPosterior make_joint_posterior(Tape& t, std::vector<double> mean,
                                       std::vector<double> chol,
                                       std::size_t heads) {
  GaussianPosterior p;
  const std::size_t d = mean.size();
  p.mean = t.constant_vector(std::move(mean));
  p.scale = t.constant_vector(std::vector<double>(d, 1.0));
  p.joint_factor = t.constant(Shape::matrix(d, d), std::move(chol));
  p.head_partition = make_head_partition(d, heads);
  return p;
}

}  // namespace

TEST_CASE("bow-mlp single token goes straight through the mlp") {
  Rng rng(1);
  const int d = 4;
  Array emb = random_embeddings(6, d, rng);
  Encoder enc = Encoder::init(EncoderKind::BowMlp, d, d, d, rng);
  // identity hidden and final weights, zero biases
  std::fill(enc.w1.value.begin(), enc.w1.value.end(), 0.0);
  std::fill(enc.w2.value.begin(), enc.w2.value.end(), 0.0);
  for (int i = 0; i < d; ++i) {
    enc.w1.value[i * d + i] = 1.0;
    enc.w2.value[i * d + i] = 1.0;
  }
  std::fill(enc.b1.value.begin(), enc.b1.value.end(), 0.0);
  std::fill(enc.b2.value.begin(), enc.b2.value.end(), 0.0);

  Tape t;
  std::vector<int> tokens = {3};
  Tensor out = enc.encode(t, emb, tokens);
  for (int j = 0; j < d; ++j)
    CHECK(out.value()[j] ==
          doctest::Approx(std::tanh(emb.value[3 * d + j])).epsilon(1e-15));
}

TEST_CASE("bow-mlp is duplication invariant") {
  Rng rng(2);
  const int d = 5;
  Array emb = random_embeddings(9, d, rng);
  Encoder enc = Encoder::init(EncoderKind::BowMlp, d, 7, d, rng);
  Tape t;
  std::vector<int> one = {4};
  std::vector<int> two = {4, 4};
  Tensor a = enc.encode(t, emb, one);
  Tensor b = enc.encode(t, emb, two);
  for (int j = 0; j < d; ++j)
    CHECK(a.value()[j] == doctest::Approx(b.value()[j]).epsilon(1e-15));
}

TEST_CASE("bow excludes padding from the average") {
  Rng rng(3);
  const int d = 4;
  Array emb = random_embeddings(6, d, rng);
  Encoder enc = Encoder::init(EncoderKind::BowMlp, d, 6, d, rng);
  Tape t;
  std::vector<int> padded = {0, 2, 0, 5, 0};
  std::vector<int> clean = {2, 5};
  Tensor a = enc.encode(t, emb, padded);
  Tensor b = enc.encode(t, emb, clean);
  for (int j = 0; j < d; ++j) CHECK(a.value()[j] == b.value()[j]);
  std::vector<int> all_pad = {0, 0};
  CHECK_THROWS_AS(enc.encode(t, emb, all_pad), EmptyInputError);
}

TEST_CASE("cnn output width is fixed across lengths") {
  Rng rng(4);
  const int d = 6;
  Array emb = random_embeddings(12, d, rng);
  Encoder enc = Encoder::init(EncoderKind::Cnn, d, 0, d, rng);
  Tape t;
  for (std::size_t len : {std::size_t{1}, std::size_t{5}, std::size_t{50}}) {
    std::vector<int> tokens(len);
    for (std::size_t i = 0; i < len; ++i)
      tokens[i] = 2 + static_cast<int>(rng.integer(10));
    Tensor out = enc.encode(t, emb, tokens);
    CHECK(out.shape().rank == 1);
    CHECK(out.size() == static_cast<std::size_t>(d));
  }
}

TEST_CASE("project_heads matches hand values") {
  Rng rng(5);
  Tape t;
  SUBCASE("identity projections reproduce z") {
    HeadProjector hp = HeadProjector::init(3, 2, rng);
    for (Array& w : hp.w) w.value = {1, 0, 0, 1};
    Tensor z = t.constant_vector({3.0, -1.5});
    auto zs = hp.project(t, z);
    REQUIRE(zs.size() == 3);
    for (const Tensor& zi : zs) {
      CHECK(zi.value()[0] == 3.0);
      CHECK(zi.value()[1] == -1.5);
    }
  }
  SUBCASE("single head degenerate count") {
    HeadProjector hp = HeadProjector::init(1, 2, rng);
    Tensor z = t.constant_vector({1.0, 2.0});
    auto zs = hp.project(t, z);
    REQUIRE(zs.size() == 1);
    const auto& w = hp.w[0].value;
    CHECK(zs[0].value()[0] ==
          doctest::Approx(w[0] * 1.0 + w[1] * 2.0).epsilon(1e-15));
  }
  SUBCASE("diagonal projections split coordinates") {
    HeadProjector hp = HeadProjector::init(2, 2, rng);
    hp.w[0].value = {1, 0, 0, 0};
    hp.w[1].value = {0, 0, 0, 1};
    Tensor z = t.constant_vector({3.0, 4.0});
    auto zs = hp.project(t, z);
    CHECK(zs[0].value()[0] == 3.0);
    CHECK(zs[0].value()[1] == 0.0);
    CHECK(zs[1].value()[0] == 0.0);
    CHECK(zs[1].value()[1] == 4.0);
  }
  SUBCASE("width mismatch is a dimension error") {
    HeadProjector hp = HeadProjector::init(2, 3, rng);
    Tensor z = t.constant_vector({1.0, 2.0});
    CHECK_THROWS_AS(hp.project(t, z), DimensionError);
  }
}

TEST_CASE("project_heads is linear in z") {
  Rng rng(6);
  HeadProjector hp = HeadProjector::init(4, 5, rng);
  Tape t;
  std::vector<double> zv(5);
  for (double& x : zv) x = rng.uniform(-2.0, 2.0);
  const double a = 1.7;
  std::vector<double> av = zv;
  for (double& x : av) x *= a;
  auto z1 = hp.project(t, t.constant_vector(zv));
  auto z2 = hp.project(t, t.constant_vector(av));
  for (std::size_t i = 0; i < z1.size(); ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(std::fabs(z2[i].value()[j] - a * z1[i].value()[j]) <= 1e-10);
}

TEST_CASE("stochastic layer with zero parameters") {
  Rng rng(7);
  StochasticLayer sl = StochasticLayer::init(3, 4, false, 1, rng);
  for (Array* a : sl.parameters())
    std::fill(a->value.begin(), a->value.end(), 0.0);
  Tape t;
  GaussianPosterior p = sl.apply(t, t.constant_vector({0.5, -1.0, 2.0}));
  for (double m : p.mean.value()) CHECK(m == 0.0);
  for (double s : p.scale.value())
    CHECK(s == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("posterior scales and joint diagonals stay positive") {
  Rng rng(8);
  StochasticLayer diag = StochasticLayer::init(4, 4, false, 1, rng);
  StochasticLayer joint = StochasticLayer::init(4, 4, true, 2, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    Tape t;
    std::vector<double> u(4);
    for (double& x : u) x = rng.uniform(-3.0, 3.0);
    GaussianPosterior pd = diag.apply(t, t.constant_vector(u));
    for (double s : pd.scale.value()) CHECK(s > 0.0);
    GaussianPosterior pj = joint.apply(t, t.constant_vector(u));
    REQUIRE(pj.joint());
    auto l = pj.joint_factor->value();
    for (std::size_t i = 0; i < 4; ++i) CHECK(l[i * 4 + i] > 0.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) CHECK(l[i * 4 + j] == 0.0);
  }
}

TEST_CASE("sample: zero noise returns the mean exactly in both modes") {
  Tape t;
  GaussianPosterior pd = make_diag_posterior(t, {1.5, -2.0}, {0.3, 0.7});
  Tensor zd = sample(t, pd, t.constant_vector({0.0, 0.0}));
  CHECK(zd.value()[0] == 1.5);
  CHECK(zd.value()[1] == -2.0);

  GaussianPosterior pj =
      make_joint_posterior(t, {1.5, -2.0}, {0.9, 0.0, -0.4, 1.1}, 2);
  Tensor zj = sample(t, pj, t.constant_vector({0.0, 0.0}));
  CHECK(zj.value()[0] == 1.5);
  CHECK(zj.value()[1] == -2.0);
}

TEST_CASE("sample hand values") {
  Tape t;
  GaussianPosterior pd = make_diag_posterior(t, {0.0, 0.0}, {2.0, 3.0});
  Tensor zd = sample(t, pd, t.constant_vector({1.0, 1.0}));
  CHECK(zd.value()[0] == 2.0);
  CHECK(zd.value()[1] == 3.0);

  GaussianPosterior pj = make_joint_posterior(t, {1.0, 1.0}, {1, 0, 0, 1}, 2);
  Tensor zj = sample(t, pj, t.constant_vector({0.5, -0.5}));
  CHECK(zj.value()[0] == 1.5);
  CHECK(zj.value()[1] == 0.5);

  CHECK_THROWS_AS(sample(t, pd, t.constant_vector({1.0, 2.0, 3.0})),
                  DimensionError);
}

TEST_CASE("joint samples reproduce the covariance L L^T") {
  // 1e5 draws; each covariance entry within 3 standard errors
  const std::size_t n = 100000;
  const std::size_t d = 3;
  std::vector<double> mean = {0.5, -0.25, 1.0};
  std::vector<double> chol = {1.0, 0.0, 0.0, 0.6, 0.8, 0.0, -0.3, 0.2, 0.7};
  std::vector<double> cov = la::aat(chol, d);

  Rng rng(1234);
  std::vector<double> sums(d, 0.0);
  std::vector<std::vector<double>> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tape t;
    GaussianPosterior p = make_joint_posterior(t, mean, chol, 1);
    std::vector<double> eps(d);
    rng.normal_fill(eps);
    Tensor z = sample(t, p, t.constant_vector(eps));
    std::vector<double> zv(z.value().begin(), z.value().end());
    for (std::size_t a = 0; a < d; ++a) sums[a] += zv[a];
    samples.push_back(std::move(zv));
  }
  std::vector<double> mu(d);
  for (std::size_t a = 0; a < d; ++a) mu[a] = sums[a] / static_cast<double>(n);
  std::vector<double> acc(d * d, 0.0);
  for (const auto& zv : samples)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        acc[a * d + b] += (zv[a] - mu[a]) * (zv[b] - mu[b]);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      const double est = acc[a * d + b] / static_cast<double>(n - 1);
      const double se = std::sqrt(
          (cov[a * d + a] * cov[b * d + b] + cov[a * d + b] * cov[a * d + b]) /
          static_cast<double>(n));
      CHECK(std::fabs(est - cov[a * d + b]) <= 3.0 * se);
    }
}

TEST_CASE("sample gradients pass the finite-difference check") {
  Rng rng(31);
  const std::size_t d = 4;
  Array mu("mu", Shape::vector(d));
  Array sc("scale", Shape::vector(d));
  Array weights("w", Shape::vector(d));
  for (double& x : mu.value) x = rng.uniform(-1.0, 1.0);
  for (double& x : sc.value) x = rng.uniform(0.5, 1.5);
  for (double& x : weights.value) x = rng.uniform(-1.0, 1.0);
  std::vector<double> eps = {0.3, -0.8, 1.2, 0.1};

  SUBCASE("diagonal mode: mu and sigma") {
    Array* leaves[] = {&mu, &sc};
    auto f = [&](Tape& t) {
      GaussianPosterior p;
      p.mean = t.leaf(mu);
      p.scale = t.leaf(sc);
      Tensor z = sample(t, p, t.constant_vector(eps));
      return t.dot(z, t.leaf(weights));
    };
    GradCheckReport rep = check_gradients(f, leaves, 1e-5, 1e-4);
    CHECK_MESSAGE(rep.ok, "max rel err ", rep.max_rel_err);
  }
  SUBCASE("joint mode: mu and the cholesky factor") {
    Array off("off", Shape::vector(d * (d - 1) / 2));
    Array diag("diag", Shape::vector(d));
    for (double& x : off.value) x = rng.uniform(-0.5, 0.5);
    for (double& x : diag.value) x = rng.uniform(-0.5, 0.5);
    Array* leaves[] = {&mu, &off, &diag};
    auto f = [&](Tape& t) {
      GaussianPosterior p;
      p.mean = t.leaf(mu);
      p.scale = t.constant_vector(std::vector<double>(d, 1.0));
      p.joint_factor = t.add(t.diag_embed(t.softplus(t.leaf(diag))),
                             t.scatter_strict_lower(t.leaf(off), d));
      p.head_partition = make_head_partition(d, 2);
      Tensor z = sample(t, p, t.constant_vector(eps));
      return t.dot(z, t.leaf(weights));
    };
    GradCheckReport rep = check_gradients(f, leaves, 1e-5, 1e-4);
    CHECK_MESSAGE(rep.ok, "max rel err ", rep.max_rel_err);
  }
}

TEST_CASE("head partitions cover the latent dimension") {
  auto parts = make_head_partition(8, 4);
  REQUIRE(parts.size() == 4);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    CHECK(parts[i].width() == 2);
    if (i) CHECK(parts[i].lo == parts[i - 1].hi);
    covered += parts[i].width();
  }
  CHECK(covered == 8);
  CHECK_THROWS_AS(make_head_partition(7, 2), ContractError);
}
