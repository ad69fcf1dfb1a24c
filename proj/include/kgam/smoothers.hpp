#pragma once

// Kernel smoothers and the GLM baseline.
//
// Single-query scaled dot-product attention is a Nadaraya-Watson estimate:
// softmax(q K^T / sqrt(d_k)) are exactly the normalised weights of the kernel
// exp(q . k_i / sqrt(d_k)), applied to the rows of V.

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace kgam {

enum class KernelKind { gaussian_distance, exp_inner_product };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian_distance;
  // gaussian: sigma in exp(-|x - x'|^2 / (2 sigma^2));
  // exp_inner_product: scale s in exp(x . x' / s), sqrt(d_k) for attention
  double bandwidth = 1.0;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp) const;
};

struct NwEstimate {
  double value = 0.0;
  // every kernel value underflowed; value is the nearest neighbour's target
  bool nearest_neighbour_fallback = false;
};

// sum_i y_i w_i / sum_i w_i for precomputed non-negative kernel values.
double nw_weighted_mean(std::span<const double> y, std::span<const double> kernel_values);

// train_x is n x p (one observation per row).
NwEstimate nw_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                      const Eigen::Ref<const Eigen::VectorXd>& query, const KernelSpec& kernel);

// Row-wise softmax(Q K^T / sqrt(d_k)) V.  Q: m x d_k, K: n x d_k, V: n x v.
Eigen::MatrixXd attention(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                          const Eigen::MatrixXd& V);

// Row-wise softmax with the row maximum subtracted first.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

struct GlmFit {
  std::vector<std::string> names;   // "(Intercept)" then feature names
  Eigen::VectorXd coefficients;     // intercept first
  double log_likelihood = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::size_t observations = 0;
  bool converged = false;
  bool separation = false;          // some |beta| > 1e3, or a single-class response
  std::vector<double> log_likelihood_trace;

  double predict_probability(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Logistic regression by IRLS (Newton steps with step halving).  X has no
// intercept column; one is prepended.  Throws DataError on collinear columns.
GlmFit glm_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               std::span<const std::string> feature_names = {}, int max_iter = 100,
               double tol = 1e-8);

nlohmann::json glm_to_json(const GlmFit& fit);
// Coefficient table in the usual regression-summary layout.
std::string glm_summary(const GlmFit& fit, double rmse = -1.0);

}  // namespace kgam
