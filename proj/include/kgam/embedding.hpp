#pragma once

// Fixed superposition embedding [0,1]^d -> R^(2d+1):
//
//   z_q = sum_p lambda_p psi(x_p + q a) + delta_q,   q = 0..2d
//
// Inputs are first mapped by a per-feature affine Normalizer onto
// [0, 1 - 2d a - 1e-9], which keeps every shifted argument x_p + q a below 1.

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "kgam/koppen.hpp"

namespace kgam {

struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;
  double target_hi = 1.0;

  std::size_t features() const noexcept { return min.size(); }

  // Affine map onto [0, target_hi].  Values beyond the fitted range are
  // passed through unclamped; the embedding rejects them.
  std::vector<double> apply(std::span<const double> raw) const;
  double apply(std::size_t feature, double raw) const;
  double invert(std::size_t feature, double normalized) const;

  bool operator==(const Normalizer&) const = default;
};

double normalizer_upper_bound(const KstParams& params);

// feature_names is only used to name a constant column in the error.
Normalizer fit_normalizer(const Eigen::MatrixXd& data, const KstParams& params,
                          std::span<const std::string> feature_names = {});

using Embedding = std::vector<double>;

Embedding kst_embed(std::span<const double> x, const KstParams& params,
                    const KoppenFunction& psi);
Embedding kst_embed(std::span<const double> x, const KstParams& params);

// Single-channel variant: z = sum_p B^-p psi(x_p).
double badic_embed(std::span<const double> x, int base, const KstParams& params,
                   const KoppenFunction& psi);
double badic_embed(std::span<const double> x, int base, const KstParams& params);

// Normalises every row then embeds it.  rows x (2d+1).
Eigen::MatrixXd embed_batch(const Eigen::MatrixXd& rows, const Normalizer& normalizer,
                            const KstParams& params);

// rows x 1 single-channel variant.
Eigen::MatrixXd badic_embed_batch(const Eigen::MatrixXd& rows, const Normalizer& normalizer,
                                  const KstParams& params, int base);

}  // namespace kgam
