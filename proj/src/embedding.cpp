#include "kgam/embedding.hpp"

#include <cmath>
#include <cstdio>

#include "kgam/errors.hpp"

namespace kgam {

namespace {

constexpr double kUpperMargin = 1e-9;
constexpr double kLowerTolerance = 1e-12;

void check_normalized(std::span<const double> x, const KstParams& params) {
  const double top_shift = 2.0 * params.d * params.a;
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (!(x[p] >= -kLowerTolerance) || !(x[p] + top_shift < 1.0)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "normalized feature %zu = %.17g outside [0, 1 - 2d*a) (2d*a = %.17g)", p,
                    x[p], top_shift);
      throw DomainError(buf);
    }
  }
}

}  // namespace

double normalizer_upper_bound(const KstParams& params) {
  return 1.0 - 2.0 * params.d * params.a - kUpperMargin;
}

double Normalizer::apply(std::size_t feature, double raw) const {
  return (raw - min[feature]) / (max[feature] - min[feature]) * target_hi;
}

double Normalizer::invert(std::size_t feature, double normalized) const {
  return min[feature] + normalized / target_hi * (max[feature] - min[feature]);
}

std::vector<double> Normalizer::apply(std::span<const double> raw) const {
  if (raw.size() != features()) {
    throw DataError("normalizer expects " + std::to_string(features()) + " features, got " +
                    std::to_string(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t p = 0; p < raw.size(); ++p) out[p] = apply(p, raw[p]);
  return out;
}

Normalizer fit_normalizer(const Eigen::MatrixXd& data, const KstParams& params,
                          std::span<const std::string> feature_names) {
  if (data.rows() < 2) throw DataError("normalizer needs at least 2 rows");
  if (data.cols() != params.d) {
    throw DataError("normalizer: data has " + std::to_string(data.cols()) +
                    " columns but d = " + std::to_string(params.d));
  }
  Normalizer n;
  n.target_hi = normalizer_upper_bound(params);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double lo = data.col(c).minCoeff();
    const double hi = data.col(c).maxCoeff();
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw DataError("non-finite value in feature " + std::to_string(c));
    }
    if (!(lo < hi)) {
      const std::string name = static_cast<std::size_t>(c) < feature_names.size()
                                   ? feature_names[static_cast<std::size_t>(c)]
                                   : "#" + std::to_string(c);
      throw DataError("constant feature '" + name + "' cannot be normalized");
    }
    n.min.push_back(lo);
    n.max.push_back(hi);
  }
  return n;
}

Embedding kst_embed(std::span<const double> x, const KstParams& params,
                    const KoppenFunction& psi) {
  if (static_cast<int>(x.size()) != params.d) {
    throw DataError("embedding expects " + std::to_string(params.d) + " coordinates, got " +
                    std::to_string(x.size()));
  }
  check_normalized(x, params);
  Embedding z(static_cast<std::size_t>(params.channels()));
  for (int q = 0; q < params.channels(); ++q) {
    double s = 0.0;
    for (int p = 0; p < params.d; ++p) {
      const double shifted = std::max(0.0, x[static_cast<std::size_t>(p)]) + q * params.a;
      s += params.lambda[static_cast<std::size_t>(p)] * psi(shifted);
    }
    z[static_cast<std::size_t>(q)] = s + params.delta(q);
  }
  return z;
}

Embedding kst_embed(std::span<const double> x, const KstParams& params) {
  return kst_embed(x, params, KoppenFunction(params));
}

double badic_embed(std::span<const double> x, int base, const KstParams& params,
                   const KoppenFunction& psi) {
  if (base < 2) throw ConfigError("B-adic base must be >= 2");
  if (static_cast<int>(x.size()) != params.d) {
    throw DataError("embedding expects " + std::to_string(params.d) + " coordinates, got " +
                    std::to_string(x.size()));
  }
  check_normalized(x, params);
  double z = 0.0;
  double weight = 1.0;
  for (double xp : x) {
    weight /= base;
    z += weight * psi(std::max(0.0, xp));
  }
  return z;
}

double badic_embed(std::span<const double> x, int base, const KstParams& params) {
  return badic_embed(x, base, params, KoppenFunction(params));
}

Eigen::MatrixXd embed_batch(const Eigen::MatrixXd& rows, const Normalizer& normalizer,
                            const KstParams& params) {
  if (rows.rows() == 0) return Eigen::MatrixXd(0, params.channels());
  if (rows.cols() != static_cast<Eigen::Index>(normalizer.features()) || rows.cols() != params.d) {
    throw DataError("schema mismatch: rows have " + std::to_string(rows.cols()) +
                    " columns, normalizer " + std::to_string(normalizer.features()) +
                    ", d = " + std::to_string(params.d));
  }
  const KoppenFunction psi(params);
  Eigen::MatrixXd out(rows.rows(), params.channels());
  std::vector<double> raw(static_cast<std::size_t>(params.d));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (int p = 0; p < params.d; ++p) raw[static_cast<std::size_t>(p)] = rows(i, p);
    const auto z = kst_embed(normalizer.apply(raw), params, psi);
    for (int q = 0; q < params.channels(); ++q) out(i, q) = z[static_cast<std::size_t>(q)];
  }
  return out;
}

Eigen::MatrixXd badic_embed_batch(const Eigen::MatrixXd& rows, const Normalizer& normalizer,
                                  const KstParams& params, int base) {
  if (rows.rows() == 0) return Eigen::MatrixXd(0, 1);
  if (rows.cols() != static_cast<Eigen::Index>(normalizer.features()) || rows.cols() != params.d) {
    throw DataError("schema mismatch: rows have " + std::to_string(rows.cols()) +
                    " columns, normalizer " + std::to_string(normalizer.features()));
  }
  const KoppenFunction psi(params);
  Eigen::MatrixXd out(rows.rows(), 1);
  std::vector<double> raw(static_cast<std::size_t>(params.d));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (int p = 0; p < params.d; ++p) raw[static_cast<std::size_t>(p)] = rows(i, p);
    out(i, 0) = badic_embed(normalizer.apply(raw), base, params, psi);
  }
  return out;
}

}  // namespace kgam
