#include <cmath>
#include <vector>

#include "doctest.h"
#include "kgam/embedding.hpp"
#include "kgam/errors.hpp"
#include "kgam/koppen.hpp"

using namespace kgam;

namespace {

KstParams small_params(int d, int k, int n, DeltaMode delta = DeltaMode::index) {
  KstOptions o;
  o.d = d;
  o.gamma = 10;
  o.k_digits = k;
  o.n_beta = n;
  o.delta_mode = delta;
  return make_kst_params(o);
}

}  // namespace

TEST_CASE("fit_normalizer examples") {
  KstOptions o;
  o.d = 5;
  const KstParams p = make_kst_params(o);
  Eigen::MatrixXd X(2, 5);
  X << 0, 0, 0, 0, 0, 10, 1, 1, 1, 1;
  const Normalizer nz = fit_normalizer(X, p);
  CHECK(nz.target_hi == doctest::Approx(1.0 - 10.0 / 90.0 - 1e-9).epsilon(1e-15));
  CHECK(nz.apply(0, 0.0) == 0.0);
  CHECK(nz.apply(0, 10.0) == doctest::Approx(0.888888888).epsilon(1e-9));
  CHECK(nz.invert(0, nz.apply(0, 7.5)) == doctest::Approx(7.5));

  Eigen::MatrixXd sym(2, 5);
  sym << -1, 0, 0, 0, 0, 1, 1, 1, 1, 1;
  const Normalizer ns = fit_normalizer(sym, p);
  CHECK(ns.apply(0, 0.0) == doctest::Approx(ns.target_hi / 2));
}

TEST_CASE("fit_normalizer rejects degenerate input") {
  const KstParams p = small_params(2, 3, 2);
  Eigen::MatrixXd c(3, 2);
  c << 1, 2, 1, 3, 1, 4;
  const std::vector<std::string> names{"alpha", "beta"};
  try {
    fit_normalizer(c, p, names);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  Eigen::MatrixXd one(1, 2);
  one << 1, 2;
  CHECK_THROWS_AS(fit_normalizer(one, p), DataError);
  Eigen::MatrixXd wrong(3, 3);
  wrong.setRandom();
  CHECK_THROWS_AS(fit_normalizer(wrong, p), DataError);
}

TEST_CASE("normalizer keeps every shifted argument inside [0, 1)") {
  for (int d : {1, 3, 5}) {
    KstOptions o;
    o.d = d;
    const KstParams p = make_kst_params(o);
    const double hi = normalizer_upper_bound(p);
    CHECK(hi + 2 * d * p.a < 1.0);
    std::vector<double> x(static_cast<std::size_t>(d), hi);
    CHECK_NOTHROW(kst_embed(x, p));
  }
}

TEST_CASE("kst_embed examples") {
  const KstParams p1 = small_params(1, 2, 2);
  const std::vector<double> zero{0.0};
  const Embedding z = kst_embed(zero, p1);
  REQUIRE(z.size() == 3);
  CHECK(z[0] == 0.0);
  // psi_2(1/90) on digits [0, 1] is 10^-3
  CHECK(std::abs(z[1] - 1.001) < 1e-12);
  CHECK(std::abs(z[2] - 2.002) < 1e-12);

  const KstParams p2 = small_params(2, 3, 2, DeltaMode::zero);
  const std::vector<double> zz{0.0, 0.0};
  CHECK(kst_embed(zz, p2)[0] == 0.0);
}

TEST_CASE("kst_embed matches the defining sum") {
  KstOptions o;
  o.d = 3;
  const KstParams p = make_kst_params(o);
  const KoppenFunction psi(p);
  const std::vector<double> x{0.12, 0.57, 0.33};
  const Embedding z = kst_embed(x, p);
  REQUIRE(z.size() == 7);
  for (int q = 0; q < 7; ++q) {
    double want = q;
    for (int j = 0; j < 3; ++j) want += p.lambda[static_cast<std::size_t>(j)] * psi(x[static_cast<std::size_t>(j)] + q * p.a);
    CHECK(z[static_cast<std::size_t>(q)] == doctest::Approx(want).epsilon(1e-15));
    CHECK(z[static_cast<std::size_t>(q)] - q >= 0.0);
    CHECK(z[static_cast<std::size_t>(q)] - q <= p.lambda_sum() + 1e-15);
  }
}

TEST_CASE("kst_embed domain errors") {
  const KstParams p = small_params(2, 3, 2);
  const std::vector<double> hi{0.99, 0.1};
  CHECK_THROWS_AS(kst_embed(hi, p), DomainError);
  const std::vector<double> neg{-0.1, 0.1};
  CHECK_THROWS_AS(kst_embed(neg, p), DomainError);
  const std::vector<double> wrong{0.1};
  CHECK_THROWS(kst_embed(wrong, p));
}

TEST_CASE("composition: d=1, q=0, delta=0 reduces to psi") {
  KstOptions o;
  o.d = 1;
  o.k_digits = 5;
  o.n_beta = 2;
  o.delta_mode = DeltaMode::zero;
  const KstParams p = make_kst_params(o);
  for (double x : {0.0, 0.137, 0.5, 0.8}) {
    const std::vector<double> v{x};
    CHECK(kst_embed(v, p)[0] == koppen_psi(x, p));
  }
}

TEST_CASE("channel separation in geometric mode") {
  KstOptions o;
  o.d = 3;
  o.lambda_mode = LambdaMode::geometric;
  o.lambda_ratio = 0.25;
  const KstParams p = make_kst_params(o);
  REQUIRE(p.lambda_sum() < 1.0);
  const std::vector<double> x{0.3, 0.1, 0.6};
  const Embedding z = kst_embed(x, p);
  for (std::size_t q = 0; q + 1 < z.size(); ++q) CHECK(z[q + 1] - z[q] >= 1.0 - p.lambda_sum() - 1e-15);
}

TEST_CASE("badic_embed examples") {
  const KstParams p2 = small_params(2, 1, 2);
  const std::vector<double> zz{0.0, 0.0};
  CHECK(badic_embed(zz, 10, p2) == 0.0);
  const std::vector<double> x{0.3, 0.0};
  CHECK(badic_embed(x, 10, p2) == doctest::Approx(0.03).epsilon(1e-15));
  const KstParams p1 = small_params(1, 1, 2);
  const std::vector<double> h{0.5};
  CHECK(badic_embed(h, 2, p1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS(badic_embed(h, 1, p1));
}

TEST_CASE("embed_batch shapes and determinism") {
  KstOptions o;
  o.d = 3;
  const KstParams p = make_kst_params(o);
  Eigen::MatrixXd X(4, 3);
  X << 1, 2, 3, 2, 5, 1, 3, 1, 2, 4, 4, 4;
  const Normalizer nz = fit_normalizer(X, p);
  const Eigen::MatrixXd Z = embed_batch(X, nz, p);
  CHECK(Z.rows() == 4);
  CHECK(Z.cols() == 7);
  CHECK(embed_batch(X, nz, p) == Z);

  const Eigen::MatrixXd row = X.topRows(1);
  const Eigen::MatrixXd one = embed_batch(row, nz, p);
  const std::vector<double> raw{1, 2, 3};
  const Embedding direct = kst_embed(nz.apply(raw), p);
  for (int q = 0; q < 7; ++q) CHECK(one(0, q) == direct[static_cast<std::size_t>(q)]);

  const Eigen::MatrixXd empty(0, 3);
  const Eigen::MatrixXd ez = embed_batch(empty, nz, p);
  CHECK(ez.rows() == 0);

  const Eigen::MatrixXd bad(2, 2);
  CHECK_THROWS_AS(embed_batch(bad, nz, p), DataError);

  const Eigen::MatrixXd b = badic_embed_batch(X, nz, p, 10);
  CHECK(b.cols() == 1);
  CHECK(b.rows() == 4);
}
