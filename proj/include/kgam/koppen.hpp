#pragma once

// Köppen inner function and the Sprecher constants of the superposition
// representation.
//
// psi_k is defined on D_k, the k-digit base-gamma rationals, by
//
//   psi_k(d) = d                                          d in D_1
//   psi_k(d) = psi_{k-1}(d - i_k g^-k) + i_k g^-beta(k)   i_k < g-1
//   psi_k(d) = (psi_k(d - g^-k) + psi_{k-1}(d + g^-k))/2   i_k = g-1
//
// with beta(r) = (n^r - 1)/(n - 1).  A point d in D_k is carried around as
// the integer m = d * g^k, so the branch is chosen on exact integer digits
// and floating point only enters when the value is assembled.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kgam {

enum class LambdaMode { sprecher, geometric };
enum class DeltaMode { index, zero };
// gamma: a = 1/(g(g-1)).  sprecher_proof: a = 1/((2d+1)(2d+2)).
enum class ShiftRule { gamma, sprecher_proof };

std::string to_string(LambdaMode m);
std::string to_string(DeltaMode m);
std::string to_string(ShiftRule m);
LambdaMode parse_lambda_mode(const std::string& s);
DeltaMode parse_delta_mode(const std::string& s);
ShiftRule parse_shift_rule(const std::string& s);

struct KstOptions {
  int d = 1;
  int gamma = 10;
  int k_digits = 6;
  std::optional<int> n_beta;  // defaults to d
  LambdaMode lambda_mode = LambdaMode::sprecher;
  double lambda_ratio = 0.5;  // geometric mode only
  DeltaMode delta_mode = DeltaMode::index;
  ShiftRule shift_rule = ShiftRule::gamma;
};

// All constants of the fixed embedding.  Build with make_kst_params().
struct KstParams {
  int d = 1;
  int gamma = 10;
  int n_beta = 1;
  int k_digits = 6;
  double a = 1.0 / 90.0;
  std::vector<double> lambda;
  LambdaMode lambda_mode = LambdaMode::sprecher;
  double lambda_ratio = 0.5;
  DeltaMode delta_mode = DeltaMode::index;
  ShiftRule shift_rule = ShiftRule::gamma;

  int channels() const noexcept { return 2 * d + 1; }
  double delta(int q) const noexcept {
    return delta_mode == DeltaMode::index ? static_cast<double>(q) : 0.0;
  }
  double lambda_sum() const noexcept;

  // Throws ConfigError when an invariant is broken.
  void validate() const;

  bool operator==(const KstParams&) const = default;
};

KstParams make_kst_params(const KstOptions& opts);

struct Digits {
  std::vector<int> digits;  // i_1 .. i_k, most significant first
  int gamma = 10;
  int k = 0;

  double value() const;
};

// Index m in [0, gamma^k - 1] of the k-digit truncation of x.  Products that
// land within round-off of an integer snap to it, so terminating base-gamma
// fractions such as 0.301 keep their digits.
std::uint64_t digit_index(double x, int gamma, int k);

Digits extract_digits(double x, int gamma, int k);

// (n^r - 1)/(n - 1); r when n == 1.  Throws std::overflow_error.
std::int64_t beta(int r, int n);

std::vector<double> lambda_coeffs(int d, int gamma, int n_beta, LambdaMode mode,
                                  double ratio = 0.5);

// Evaluator for psi_k at fixed (gamma, n, k).  Immutable after construction.
class KoppenFunction {
 public:
  KoppenFunction(int gamma, int n_beta, int k_digits);
  explicit KoppenFunction(const KstParams& p)
      : KoppenFunction(p.gamma, p.n_beta, p.k_digits) {}

  double operator()(double x) const;

  // Memoised over (level, index) for the duration of the call.
  std::vector<double> evaluate(std::span<const double> xs) const;

  // psi_level at m * gamma^-level, 0 <= m <= gamma^level.
  double at_index(int level, std::uint64_t m) const;

  int gamma() const noexcept { return gamma_; }
  int n_beta() const noexcept { return n_beta_; }
  int k_digits() const noexcept { return k_; }

 private:
  int gamma_;
  int n_beta_;
  int k_;
  std::vector<double> level_scale_;  // gamma^-beta(level), index 1..k
};

// Memoised batch evaluation; the cache lives for one call only.
std::vector<double> koppen_psi_batch(std::span<const double> xs, const KoppenFunction& psi);

double koppen_psi(double x, const KstParams& params);

struct PsiSample {
  double x;
  double psi;
};

std::vector<PsiSample> psi_series(const KstParams& params, int grid_points,
                                  double x_lo = 0.0, double x_hi = 1.0);

// CSV "x,psi", 17 significant digits.
std::string psi_series_csv(std::span<const PsiSample> series);

}  // namespace kgam
