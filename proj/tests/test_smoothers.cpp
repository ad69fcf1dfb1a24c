#include <cmath>
#include <vector>

#include "doctest.h"
#include "kgam/datasets.hpp"
#include "kgam/errors.hpp"
#include "kgam/rng.hpp"
#include "kgam/smoothers.hpp"

using namespace kgam;

namespace {

std::string iris_path() { return std::string(KGAM_DATA_DIR) + "/iris.csv"; }

Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
  }
  return m;
}

}  // namespace

TEST_CASE("kernels") {
  Eigen::VectorXd a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  const KernelSpec g{KernelKind::gaussian_distance, 5.0};
  CHECK(g(a, b) == doctest::Approx(std::exp(-25.0 / 50.0)));
  CHECK(g(a, a) == 1.0);
  const KernelSpec ip{KernelKind::exp_inner_product, 2.0};
  Eigen::VectorXd c(2);
  c << 1, 2;
  CHECK(ip(b, c) == doctest::Approx(std::exp(11.0 / 2.0)));
  const KernelSpec bad{KernelKind::gaussian_distance, 0.0};
  CHECK_THROWS_AS(bad(a, b), ConfigError);
}

TEST_CASE("Nadaraya-Watson weighted mean") {
  const std::vector<double> y{1.0, 3.0};
  const std::vector<double> w{1.0, 1.0};
  CHECK(nw_weighted_mean(y, w) == 2.0);
  const std::vector<double> w2{3.0, 1.0};
  CHECK(nw_weighted_mean(y, w2) == 1.5);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(nw_weighted_mean(y, zero), DomainError);
  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(nw_weighted_mean(y, shorter), DataError);
}

TEST_CASE("nw_predict and its underflow fallback") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 10;
  Eigen::VectorXd y(3);
  y << 5, 7, 100;
  Eigen::VectorXd q(1);
  q << 0.5;
  const NwEstimate e = nw_predict(X, y, q, {KernelKind::gaussian_distance, 0.5});
  const double w0 = std::exp(-0.25 / 0.5), w1 = w0, w2 = std::exp(-90.25 / 0.5);
  CHECK(e.value == doctest::Approx((5 * w0 + 7 * w1 + 100 * w2) / (w0 + w1 + w2)));
  CHECK_FALSE(e.nearest_neighbour_fallback);

  q << 9.0;
  const NwEstimate far = nw_predict(X, y, q, {KernelKind::gaussian_distance, 1e-3});
  CHECK(far.nearest_neighbour_fallback);
  CHECK(far.value == 100.0);

  Eigen::VectorXd q2(2);
  CHECK_THROWS_AS(nw_predict(X, y, q2, {}), DataError);
}

TEST_CASE("softmax rows are stable and normalised") {
  Eigen::MatrixXd s(2, 3);
  s << 1000, 1001, 1002, 0, 1, 2;
  const Eigen::MatrixXd p = softmax_rows(s);
  CHECK(p.allFinite());
  for (int r = 0; r < 2; ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
  CHECK(p(0, 2) == doctest::Approx(p(1, 2)));
}

TEST_CASE("single-query attention is Nadaraya-Watson with the exp inner product kernel") {
  SplitMix64 rng(77);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index dk = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(12));
    const Eigen::MatrixXd Q = random_matrix(rng, 1, dk);
    const Eigen::MatrixXd K = random_matrix(rng, n, dk);
    const Eigen::MatrixXd V = random_matrix(rng, n, 1);
    const double att = attention(Q, K, V)(0, 0);
    const NwEstimate nw = nw_predict(K, V.col(0), Q.row(0).transpose(),
                                     {KernelKind::exp_inner_product, std::sqrt(static_cast<double>(dk))});
    CHECK(std::abs(att - nw.value) <= 1e-12);
  }
}

TEST_CASE("attention dimension errors") {
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Ones(1, 2);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Ones(3, 3);
  const Eigen::MatrixXd V = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(attention(Q, K, V), DataError);
  const Eigen::MatrixXd K2 = Eigen::MatrixXd::Ones(3, 2);
  const Eigen::MatrixXd V2 = Eigen::MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(attention(Q, K2, V2), DataError);
}

TEST_CASE("GLM on the full binarized Iris matches an external reference fit") {
  const Dataset d = iris_binarize(iris_load(iris_path()));
  const GlmFit fit = glm_fit(d.X, d.y, d.feature_names);
  REQUIRE(fit.converged);
  CHECK_FALSE(fit.separation);
  // statsmodels Logit on the same 150 rows
  const double want[] = {-26.271008717862117, 2.4175646735539225, 6.0700045638142655, -4.949219197850437};
  for (int j = 0; j < 4; ++j) CHECK(fit.coefficients(j) == doctest::Approx(want[j]).epsilon(1e-7));
  CHECK(fit.log_likelihood == doctest::Approx(-29.952578596848554).epsilon(1e-10));
  CHECK(fit.aic == doctest::Approx(2 * 4 - 2 * fit.log_likelihood).epsilon(1e-15));
  CHECK(fit.bic == doctest::Approx(4 * std::log(150.0) - 2 * fit.log_likelihood).epsilon(1e-15));
  CHECK(fit.aic == doctest::Approx(67.90515719369711).epsilon(1e-9));
  CHECK(fit.bic == doctest::Approx(79.94769837008212).epsilon(1e-9));
  CHECK(fit.names[1] == "SepalWidth");

  // score equations X^T (y - p) = 0 at the optimum
  Eigen::VectorXd score = Eigen::VectorXd::Zero(4);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double r = d.y(i) - fit.predict_probability(d.X.row(i).transpose());
    score(0) += r;
    score.tail(3) += r * d.X.row(i).transpose();
  }
  CHECK(score.norm() < 1e-6);
}

TEST_CASE("GLM log-likelihood never decreases") {
  const Dataset d = iris_binarize(iris_load(iris_path()));
  const GlmFit fit = glm_fit(d.X, d.y);
  for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
    CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1]);
  }
}

TEST_CASE("GLM separation, single class and collinearity") {
  Eigen::MatrixXd X(8, 1);
  X << 1, 2, 3, 4, 5, 6, 7, 8;
  Eigen::VectorXd y(8);
  y << 0, 0, 0, 0, 1, 1, 1, 1;
  const GlmFit sep = glm_fit(X, y);
  CHECK(sep.separation);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  const GlmFit single = glm_fit(X, ones);
  CHECK(single.separation);
  CHECK_FALSE(single.converged);

  Eigen::MatrixXd C(8, 2);
  C.col(0) = X.col(0);
  C.col(1) = 2 * X.col(0);
  const std::vector<std::string> names{"a", "b"};
  try {
    glm_fit(C, y, names);
    FAIL("expected collinearity error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("collinear") != std::string::npos);
  }

  Eigen::VectorXd bad = y;
  bad(0) = 0.5;
  CHECK_THROWS_AS(glm_fit(X, bad), DataError);
}

TEST_CASE("GLM summary and JSON") {
  const Dataset d = iris_binarize(iris_load(iris_path()));
  const GlmFit fit = glm_fit(d.X, d.y, d.feature_names);
  const std::string s = glm_summary(fit, 0.26);
  CHECK(s.find("Num.Obs.") != std::string::npos);
  CHECK(s.find("AIC") != std::string::npos);
  CHECK(s.find("RMSE") != std::string::npos);
  const auto j = glm_to_json(fit);
  CHECK(j["coefficients"]["PetalWidth"].get<double>() < 0);
  CHECK(j["observations"] == 150);
}
