#include "kgam/koppen.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "kgam/errors.hpp"

namespace kgam {

namespace {

constexpr double kDomainTolerance = 1e-12;
constexpr double kSeriesCutoff = 1e-18;

std::uint64_t checked_power(int base, int exponent) {
  std::uint64_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(base) / 2) {
      throw ConfigError("gamma^k does not fit in 63 bits (gamma=" + std::to_string(base) +
                        ", k=" + std::to_string(exponent) + ")");
    }
    result *= static_cast<std::uint64_t>(base);
  }
  return result;
}

struct LevelIndex {
  int level;
  std::uint64_t m;
  bool operator==(const LevelIndex&) const = default;
};

struct LevelIndexHash {
  std::size_t operator()(const LevelIndex& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.m * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k.level));
  }
};

using PsiCache = std::unordered_map<LevelIndex, double, LevelIndexHash>;

}  // namespace

std::string to_string(LambdaMode m) { return m == LambdaMode::sprecher ? "sprecher" : "geometric"; }
std::string to_string(DeltaMode m) { return m == DeltaMode::index ? "index" : "zero"; }
std::string to_string(ShiftRule m) { return m == ShiftRule::gamma ? "gamma" : "sprecher_proof"; }

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "sprecher") return LambdaMode::sprecher;
  if (s == "geometric") return LambdaMode::geometric;
  throw ConfigError("unknown lambda mode '" + s + "'");
}

DeltaMode parse_delta_mode(const std::string& s) {
  if (s == "index") return DeltaMode::index;
  if (s == "zero") return DeltaMode::zero;
  throw ConfigError("unknown delta mode '" + s + "'");
}

ShiftRule parse_shift_rule(const std::string& s) {
  if (s == "gamma") return ShiftRule::gamma;
  if (s == "sprecher_proof") return ShiftRule::sprecher_proof;
  throw ConfigError("unknown shift rule '" + s + "'");
}

double KstParams::lambda_sum() const noexcept {
  double s = 0.0;
  for (double l : lambda) s += l;
  return s;
}

void KstParams::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (gamma < d + 2) {
    throw ConfigError("gamma must be >= d+2 (gamma=" + std::to_string(gamma) +
                      ", d=" + std::to_string(d) + ")");
  }
  if (n_beta < 1) throw ConfigError("n_beta must be >= 1");
  if (k_digits < 1) throw ConfigError("k_digits must be >= 1");
  checked_power(gamma, k_digits);
  if (!(a > 0.0) || 2.0 * d * a >= 1.0) throw ConfigError("shift a must satisfy 0 < 2d*a < 1");
  if (static_cast<int>(lambda.size()) != d) throw ConfigError("lambda must have d entries");
  for (std::size_t p = 1; p < lambda.size(); ++p) {
    if (!(lambda[p] < lambda[p - 1])) throw ConfigError("lambda must be strictly decreasing");
  }
  if (lambda_mode == LambdaMode::sprecher && lambda.front() != 1.0) {
    throw ConfigError("sprecher lambda must start at 1");
  }
  if (lambda_mode == LambdaMode::geometric && !(lambda_ratio > 0.0 && lambda_ratio < 1.0)) {
    throw ConfigError("geometric lambda ratio must lie in (0, 1)");
  }
}

KstParams make_kst_params(const KstOptions& opts) {
  KstParams p;
  p.d = opts.d;
  p.gamma = opts.gamma;
  p.n_beta = opts.n_beta.value_or(opts.d);
  p.k_digits = opts.k_digits;
  p.lambda_mode = opts.lambda_mode;
  p.lambda_ratio = opts.lambda_ratio;
  p.delta_mode = opts.delta_mode;
  p.shift_rule = opts.shift_rule;
  if (p.d < 1) throw ConfigError("d must be >= 1");
  if (p.gamma < p.d + 2) {
    throw ConfigError("gamma must be >= d+2 (gamma=" + std::to_string(p.gamma) +
                      ", d=" + std::to_string(p.d) + ")");
  }
  if (p.shift_rule == ShiftRule::gamma) {
    p.a = 1.0 / (static_cast<double>(p.gamma) * (p.gamma - 1));
  } else {
    p.a = 1.0 / ((2.0 * p.d + 1.0) * (2.0 * p.d + 2.0));
  }
  p.lambda = lambda_coeffs(p.d, p.gamma, p.n_beta, p.lambda_mode, p.lambda_ratio);
  p.validate();
  return p;
}

double Digits::value() const {
  double v = 0.0;
  double scale = 1.0;
  for (int digit : digits) {
    scale /= gamma;
    v += digit * scale;
  }
  return v;
}

std::uint64_t digit_index(double x, int gamma, int k) {
  if (gamma < 2) throw ConfigError("gamma must be >= 2");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(x >= -kDomainTolerance && x <= 1.0 + kDomainTolerance)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    throw DomainError(std::string("digit expansion needs x in [0,1], got ") + buf);
  }
  const std::uint64_t top = checked_power(gamma, k);
  const double scaled = std::clamp(x, 0.0, 1.0) * static_cast<double>(top);
  const double nearest = std::nearbyint(scaled);
  const double snap = 64.0 * DBL_EPSILON * std::max(1.0, scaled);
  const double whole = std::abs(scaled - nearest) <= snap ? nearest : std::floor(scaled);
  const auto m = static_cast<std::uint64_t>(whole);
  return std::min(m, top - 1);
}

Digits extract_digits(double x, int gamma, int k) {
  std::uint64_t m = digit_index(x, gamma, k);
  Digits out;
  out.gamma = gamma;
  out.k = k;
  out.digits.assign(static_cast<std::size_t>(k), 0);
  for (int l = k - 1; l >= 0; --l) {
    out.digits[static_cast<std::size_t>(l)] = static_cast<int>(m % static_cast<std::uint64_t>(gamma));
    m /= static_cast<std::uint64_t>(gamma);
  }
  return out;
}

std::int64_t beta(int r, int n) {
  if (r < 1) throw std::invalid_argument("beta: r must be >= 1");
  if (n < 1) throw std::invalid_argument("beta: n must be >= 1");
  if (n == 1) return r;
  // beta(r+1) = n*beta(r) + 1
  std::int64_t b = 1;
  for (int i = 1; i < r; ++i) {
    if (b > (std::numeric_limits<std::int64_t>::max() - 1) / n) {
      throw std::overflow_error("beta(" + std::to_string(r) + ", " + std::to_string(n) +
                                ") exceeds 64-bit range");
    }
    b = b * n + 1;
  }
  return b;
}

std::vector<double> lambda_coeffs(int d, int gamma, int n_beta, LambdaMode mode, double ratio) {
  if (d < 1) throw ConfigError("lambda_coeffs: d must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(d));
  if (mode == LambdaMode::geometric) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("geometric lambda ratio must lie in (0, 1)");
    double v = 1.0;
    for (int p = 1; p <= d; ++p) {
      v *= ratio;
      out[static_cast<std::size_t>(p - 1)] = v;
    }
    return out;
  }
  if (gamma < d + 2) throw ConfigError("lambda_coeffs: gamma must be >= d+2");
  out[0] = 1.0;
  for (int p = 2; p <= d; ++p) {
    double sum = 0.0;
    for (int r = 1;; ++r) {
      const double exponent = static_cast<double>(p - 1) * static_cast<double>(beta(r, n_beta));
      const double term = std::pow(static_cast<double>(gamma), -exponent);
      if (term < kSeriesCutoff) break;
      sum += term;
    }
    out[static_cast<std::size_t>(p - 1)] = sum;
  }
  return out;
}

KoppenFunction::KoppenFunction(int gamma, int n_beta, int k_digits)
    : gamma_(gamma), n_beta_(n_beta), k_(k_digits) {
  if (gamma < 2) throw ConfigError("gamma must be >= 2");
  if (n_beta < 1) throw ConfigError("n_beta must be >= 1");
  if (k_digits < 1) throw ConfigError("k_digits must be >= 1");
  checked_power(gamma, k_digits);
  level_scale_.assign(static_cast<std::size_t>(k_digits) + 1, 0.0);
  for (int level = 1; level <= k_digits; ++level) {
    try {
      const auto b = beta(level, n_beta);
      level_scale_[static_cast<std::size_t>(level)] =
          std::pow(static_cast<double>(gamma), -static_cast<double>(b));
    } catch (const std::overflow_error&) {
      level_scale_[static_cast<std::size_t>(level)] = 0.0;  // far below double range
    }
  }
}

namespace {

double psi_recursive(int level, std::uint64_t m, std::uint64_t gamma,
                     const std::vector<double>& scale, PsiCache* cache) {
  if (level == 1) return static_cast<double>(m) / static_cast<double>(gamma);
  const std::uint64_t digit = m % gamma;
  const std::uint64_t parent = m / gamma;
  if (digit < gamma - 1) {
    return psi_recursive(level - 1, parent, gamma, scale, cache) +
           static_cast<double>(digit) * scale[static_cast<std::size_t>(level)];
  }
  if (cache != nullptr) {
    if (auto it = cache->find({level, m}); it != cache->end()) return it->second;
  }
  // d - g^-k has last digit g-2; d + g^-k carries into D_{k-1}.
  const double below = psi_recursive(level, m - 1, gamma, scale, cache);
  const double above = psi_recursive(level - 1, parent + 1, gamma, scale, cache);
  const double v = 0.5 * (below + above);
  if (cache != nullptr) cache->emplace(LevelIndex{level, m}, v);
  return v;
}

}  // namespace

double KoppenFunction::at_index(int level, std::uint64_t m) const {
  if (level < 1 || level > k_) throw DomainError("psi level out of range");
  if (m > checked_power(gamma_, level)) throw DomainError("psi index above gamma^level");
  return psi_recursive(level, m, static_cast<std::uint64_t>(gamma_), level_scale_, nullptr);
}

double KoppenFunction::operator()(double x) const {
  return psi_recursive(k_, digit_index(x, gamma_, k_), static_cast<std::uint64_t>(gamma_),
                       level_scale_, nullptr);
}

std::vector<double> KoppenFunction::evaluate(std::span<const double> xs) const {
  PsiCache cache;
  std::vector<double> out;
  out.reserve(xs.size());
  const auto g = static_cast<std::uint64_t>(gamma_);
  for (double x : xs) {
    out.push_back(psi_recursive(k_, digit_index(x, gamma_, k_), g, level_scale_, &cache));
  }
  return out;
}

std::vector<double> koppen_psi_batch(std::span<const double> xs, const KoppenFunction& psi) {
  return psi.evaluate(xs);
}

double koppen_psi(double x, const KstParams& params) { return KoppenFunction(params)(x); }

std::vector<PsiSample> psi_series(const KstParams& params, int grid_points, double x_lo,
                                  double x_hi) {
  if (grid_points < 2) throw ConfigError("psi_series needs at least 2 grid points");
  if (!(x_lo >= 0.0 && x_hi <= 1.0 && x_lo < x_hi)) {
    throw ConfigError("psi_series range must satisfy 0 <= lo < hi <= 1");
  }
  const KoppenFunction psi(params);
  std::vector<double> xs(static_cast<std::size_t>(grid_points));
  const double step = (x_hi - x_lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) xs[static_cast<std::size_t>(i)] = x_lo + i * step;
  xs.back() = x_hi;
  const auto values = koppen_psi_batch(xs, psi);
  std::vector<PsiSample> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = {xs[i], values[i]};
  return out;
}

std::string psi_series_csv(std::span<const PsiSample> series) {
  std::string out = "x,psi\n";
  char buf[96];
  for (const auto& s : series) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.x, s.psi);
    out += buf;
  }
  return out;
}

}  // namespace kgam
