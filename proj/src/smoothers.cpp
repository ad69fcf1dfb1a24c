#include "kgam/smoothers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>

#include "kgam/errors.hpp"

namespace kgam {

namespace {

constexpr double kRidgeJitter = 1e-10;
constexpr double kSeparationEta = 30.0;
constexpr double kSeparationBound = 1e3;
constexpr int kMaxHalvings = 40;

double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

}  // namespace

double KernelSpec::operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& xp) const {
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  if (kind == KernelKind::gaussian_distance) {
    return std::exp(-(x - xp).squaredNorm() / (2.0 * bandwidth * bandwidth));
  }
  return std::exp(x.dot(xp) / bandwidth);
}

double nw_weighted_mean(std::span<const double> y, std::span<const double> kernel_values) {
  if (y.empty() || y.size() != kernel_values.size()) {
    throw DataError("weighted mean needs matching, non-empty targets and kernel values");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += y[i] * kernel_values[i];
    den += kernel_values[i];
  }
  if (!(den > 0.0)) throw DomainError("kernel mass is zero");
  return num / den;
}

NwEstimate nw_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                      const Eigen::Ref<const Eigen::VectorXd>& query, const KernelSpec& kernel) {
  if (train_x.rows() < 1) throw DataError("Nadaraya-Watson needs at least one training point");
  if (train_x.rows() != train_y.size() || train_x.cols() != query.size()) {
    throw DataError("Nadaraya-Watson dimension mismatch");
  }
  std::vector<double> w(static_cast<std::size_t>(train_x.rows()));
  double mass = 0.0;
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
    w[static_cast<std::size_t>(i)] = kernel(query, train_x.row(i).transpose());
    mass += w[static_cast<std::size_t>(i)];
  }
  if (mass > 0.0 && std::isfinite(mass)) {
    return {nw_weighted_mean(std::span<const double>(train_y.data(), w.size()), w), false};
  }
  // Underflow (or overflow) of every kernel value: fall back to the closest
  // training point under the kernel's own similarity.
  Eigen::Index best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
    const double score = kernel.kind == KernelKind::gaussian_distance
                             ? -(query - train_x.row(i).transpose()).squaredNorm()
                             : query.dot(train_x.row(i).transpose());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return {train_y(best), true};
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double top = scores.row(r).maxCoeff();
    out.row(r) = (scores.row(r).array() - top).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Eigen::MatrixXd attention(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                          const Eigen::MatrixXd& V) {
  if (Q.cols() < 1) throw DataError("attention needs d_k >= 1");
  if (Q.cols() != K.cols()) {
    throw DataError("attention: Q has d_k = " + std::to_string(Q.cols()) + ", K has " +
                    std::to_string(K.cols()));
  }
  if (K.rows() != V.rows()) {
    throw DataError("attention: K has " + std::to_string(K.rows()) + " rows, V has " +
                    std::to_string(V.rows()));
  }
  if (K.rows() < 1) throw DataError("attention needs at least one key");
  const double scale = std::sqrt(static_cast<double>(Q.cols()));
  return softmax_rows((Q * K.transpose()) / scale) * V;
}

double GlmFit::predict_probability(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() + 1 != coefficients.size()) throw DataError("GLM feature count mismatch");
  return sigmoid(coefficients(0) + coefficients.tail(x.size()).dot(x));
}

GlmFit glm_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               std::span<const std::string> feature_names, int max_iter, double tol) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw DataError("GLM: response length differs from row count");
  if (n <= p + 1) throw DataError("GLM needs more rows than coefficients + 1");
  bool has0 = false;
  bool has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 0.0) {
      has0 = true;
    } else if (y(i) == 1.0) {
      has1 = true;
    } else {
      throw DataError("GLM response must be 0 or 1");
    }
  }

  GlmFit fit;
  fit.names.push_back("(Intercept)");
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.names.push_back(static_cast<std::size_t>(j) < feature_names.size()
                            ? feature_names[static_cast<std::size_t>(j)]
                            : "x" + std::to_string(j + 1));
  }
  fit.observations = static_cast<std::size_t>(n);

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    std::string names;
    const auto perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < design.cols(); ++j) {
      names += (names.empty() ? "" : ", ") + fit.names[static_cast<std::size_t>(perm(j))];
    }
    throw DataError("GLM design is rank deficient; collinear column(s): " + names);
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd eta = design * beta;
  double ll = log_likelihood(eta, y);
  fit.log_likelihood_trace.push_back(ll);
  const Eigen::MatrixXd jitter = kRidgeJitter * Eigen::MatrixXd::Identity(p + 1, p + 1);

  int iter = 0;
  Eigen::VectorXd grad;
  for (;; ++iter) {
    Eigen::VectorXd prob(n);
    Eigen::VectorXd weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
    grad = design.transpose() * (y - prob);
    if (grad.norm() < tol && has0 && has1) {
      fit.converged = true;
      break;
    }
    if (iter >= max_iter) break;
    const Eigen::MatrixXd info = design.transpose() * weight.asDiagonal() * design + jitter;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    if (!step.allFinite()) throw DataError("GLM: singular weighted normal equations");
    double t = 1.0;
    Eigen::VectorXd candidate;
    double candidate_ll = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      candidate = beta + t * step;
      candidate_ll = log_likelihood(design * candidate, y);
      if (candidate_ll >= ll) break;
    }
    if (!(candidate_ll >= ll)) break;  // no ascent direction left at working precision
    beta = candidate;
    eta = design * beta;
    ll = candidate_ll;
    fit.log_likelihood_trace.push_back(ll);
  }

  fit.coefficients = beta;
  fit.iterations = iter;
  fit.log_likelihood = ll;
  fit.gradient_norm = grad.norm();
  const double k = static_cast<double>(p + 1);
  fit.aic = 2.0 * k - 2.0 * ll;
  fit.bic = k * std::log(static_cast<double>(n)) - 2.0 * ll;
  // Complete separation shows up as fitted probabilities that all match y;
  // quasi-separation as some linear predictor running off to +-infinity.
  const double worst_fit = (y - eta.unaryExpr([](double e) { return sigmoid(e); })).cwiseAbs().maxCoeff();
  fit.separation = !(has0 && has1) || beta.cwiseAbs().maxCoeff() > kSeparationBound || worst_fit < 1e-6 ||
                   eta.cwiseAbs().maxCoeff() > kSeparationEta;
  return fit;
}

nlohmann::json glm_to_json(const GlmFit& fit) {
  nlohmann::json coef = nlohmann::json::object();
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    coef[fit.names[j]] = fit.coefficients(static_cast<Eigen::Index>(j));
  }
  return {{"coefficients", coef},
          {"log_likelihood", fit.log_likelihood},
          {"aic", fit.aic},
          {"bic", fit.bic},
          {"observations", fit.observations},
          {"iterations", fit.iterations},
          {"gradient_norm", fit.gradient_norm},
          {"converged", fit.converged},
          {"separation", fit.separation}};
}

std::string glm_summary(const GlmFit& fit, double rmse) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-14s %12s\n", "", "GLM");
  out += buf;
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%-14s %12.3f\n", fit.names[j].c_str(),
                  fit.coefficients(static_cast<Eigen::Index>(j)));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-14s %12zu\n", "Num.Obs.", fit.observations);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-14s %12.1f\n%-14s %12.1f\n%-14s %12.3f\n", "AIC", fit.aic,
                "BIC", fit.bic, "Log.Lik.", fit.log_likelihood);
  out += buf;
  if (rmse >= 0.0) {
    std::snprintf(buf, sizeof buf, "%-14s %12.2f\n", "RMSE", rmse);
    out += buf;
  }
  out += "(standard errors not computed)\n";
  if (!fit.converged) out += "warning: IRLS did not converge\n";
  if (fit.separation) out += "warning: (quasi-)separation detected\n";
  return out;
}

}  // namespace kgam
