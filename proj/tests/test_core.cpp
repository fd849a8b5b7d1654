#include "doctest.h"

#include <cmath>

#include "dynunc/core.hpp"
#include "dynunc/mc.hpp"
#include "support/test_utils.hpp"

using namespace dynunc;
using testutil::ar1_cov;
using testutil::random_psd;
using testutil::random_vec;

TEST_SUITE("core") {

TEST_CASE("linear_propagate: identity model passes estimate and covariance through") {
  rng::Xoshiro256ss gen(11);
  const Index n = 4;
  const Vec x = random_vec(n, gen);
  const Mat ux = random_psd(n, gen);
  const auto out = linear_propagate(LinearModel{Mat::Identity(n, n)}, x, ux);
  CHECK((out.y - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.cov - ux).cwiseAbs().maxCoeff() <= 1e-14 * max_abs(ux));
}

TEST_CASE("linear_propagate: mean of uncorrelated values has variance sigma^2/N") {
  const Index n = 8;
  const double sigma = 0.3;
  LinearModel mean_model{Mat::Constant(1, n, 1.0 / n)};
  const auto out = linear_propagate(mean_model, Vec::Ones(n), sigma * sigma * Mat::Identity(n, n));
  CHECK(out.y[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out.cov(0, 0) == doctest::Approx(sigma * sigma / n).epsilon(1e-12));
}

TEST_CASE("linear_propagate: trapezoid cumulative mean with AR(1) input matches Monte Carlo") {
  const Index n = 5;
  const Mat ux = ar1_cov(n, 0.7, 0.9);
  const LinearModel model = cumulative_mean_model(n, 0.25);
  rng::Xoshiro256ss gen(5);
  const Vec x = random_vec(n, gen);

  const auto closed = linear_propagate(model, x, ux);

  mc::McOptions opt;
  opt.draws = 100000;
  opt.seed = 99;
  const auto mcres = mc::mc_propagate([&](const Vec& v) { return Vec(model.sens * v); }, x, ux, opt);

  testutil::check_diag_match(closed.cov.diagonal(), mcres.std_dev.array().square().matrix(), 0.02);
}

TEST_CASE("linear_propagate: input validation") {
  LinearModel model{Mat::Identity(3, 3)};
  CHECK_THROWS_AS(linear_propagate(model, Vec::Zero(2), Mat::Identity(2, 2)), InvalidArgument);
  CHECK_THROWS_AS(linear_propagate(model, Vec::Zero(3), Mat::Identity(2, 2)), InvalidArgument);
  Mat skew = Mat::Identity(3, 3);
  skew(0, 1) = 0.5;  // asymmetric beyond tolerance
  CHECK_THROWS_AS(linear_propagate(model, Vec::Zero(3), skew), InvalidArgument);
}

TEST_CASE("linear_propagate: output covariance is symmetric PSD for random inputs") {
  rng::Xoshiro256ss gen(123);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 2 + static_cast<Index>(gen.next() % 15);
    const Index k = 1 + static_cast<Index>(gen.next() % 15);
    Mat c(k, n);
    for (Index i = 0; i < k; ++i) c.row(i) = random_vec(n, gen).transpose();
    const auto out = linear_propagate(LinearModel{c}, random_vec(n, gen), random_psd(n, gen));
    testutil::check_symmetric_psd(out.cov);
  }
}

TEST_CASE("linear_propagate: random model matches Monte Carlo on the diagonal") {
  rng::Xoshiro256ss gen(77);
  const Index n = 16, k = 7;
  Mat c(k, n);
  for (Index i = 0; i < k; ++i) c.row(i) = random_vec(n, gen).transpose();
  const Vec x = random_vec(n, gen);
  const Mat ux = random_psd(n, gen, 0.5);
  const auto closed = linear_propagate(LinearModel{c}, x, ux);

  mc::McOptions opt;
  opt.draws = 100000;
  opt.seed = 3;
  const auto mcres = mc::mc_propagate([&](const Vec& v) { return Vec(c * v); }, x, ux, opt);
  testutil::check_diag_match(closed.cov.diagonal(), mcres.std_dev.array().square().matrix(), 0.02);
}

TEST_CASE("cumulative_mean_model: two- and three-point rows") {
  const Mat c2 = cumulative_mean_model(2, 1.0).sens;
  CHECK(c2.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c2(1, 0) == doctest::Approx(0.5));
  CHECK(c2(1, 1) == doctest::Approx(0.5));

  const Mat c3 = cumulative_mean_model(3, 1.0).sens;
  CHECK(c3(2, 0) == doctest::Approx(0.25));
  CHECK(c3(2, 1) == doctest::Approx(0.5));
  CHECK(c3(2, 2) == doctest::Approx(0.25));
}

TEST_CASE("cumulative_mean_model: constant input maps to itself (rows sum to one)") {
  for (Index n : {2, 5, 17}) {
    const Mat c = cumulative_mean_model(n, 0.125).sens;
    const Vec y = c * Vec::Constant(n, 3.25);
    CHECK(y[0] == 0.0);
    for (Index j = 1; j < n; ++j) CHECK(y[j] == doctest::Approx(3.25).epsilon(1e-13));
  }
  CHECK_THROWS_AS(cumulative_mean_model(1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(cumulative_mean_model(4, 0.0), InvalidArgument);
}

TEST_CASE("chol_psd: exact factors for definite matrices") {
  CHECK((chol_psd(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Mat l = chol_psd(d);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 1) == doctest::Approx(3.0));
  CHECK(l(0, 1) == 0.0);
}

TEST_CASE("chol_psd: rank-one matrix reconstructs within the jitter budget") {
  rng::Xoshiro256ss gen(8);
  const Vec v = random_vec(6, gen);
  const Mat u = v * v.transpose();
  const double jitter = 1e-10;
  const Mat l = chol_psd(u, jitter);
  const double err = max_abs(l * l.transpose() - u);
  CHECK(err <= 10.0 * jitter * u.trace());
}

TEST_CASE("chol_psd: rejects indefinite and asymmetric input") {
  Mat ind = Mat::Identity(2, 2);
  ind(1, 1) = -1.0;
  CHECK_THROWS_AS(chol_psd(ind), NumericError);

  Mat asym = Mat::Identity(2, 2);
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(chol_psd(asym), InvalidArgument);
}

TEST_CASE("uncertainty encodings agree on the materialized covariance") {
  const Index n = 5;
  const auto w = Uncertainty::white(0.2);
  CHECK((w.full_cov(n) - 0.04 * Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-15);
  Vec s = Vec::LinSpaced(n, 0.1, 0.5);
  const auto p = Uncertainty::pointwise(s);
  CHECK(p.full_cov(n).diagonal().isApprox(s.array().square().matrix()));
  CHECK(p.pointwise_std(n).isApprox(s));
  CHECK_THROWS_AS(Uncertainty::white(-1.0), InvalidArgument);
}

}  // TEST_SUITE
