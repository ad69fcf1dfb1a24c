#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace kgam {

struct Dataset {
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool binary_target = false;
  // Partition of 0..n-1.  A freshly built dataset trains on every row.
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<std::string> warnings;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(X.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(X.cols()); }

  Eigen::MatrixXd features_of(std::span<const std::size_t> idx) const;
  Eigen::VectorXd targets_of(std::span<const std::size_t> idx) const;

  // Throws DataError if the split is not a partition or labels are not {0,1}.
  void validate() const;
};

// 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5
double friedman_mu(std::span<const double> x);

// Row i draws x1..x5 ~ U[0,1) then one standard normal, in that order,
// from SplitMix64(seed).
Dataset friedman_generate(std::size_t n = 100, std::uint64_t seed = 42, double noise_sd = 1.0);

// 64-bit FNV-1a of the file bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Expects SepalLength, SepalWidth, PetalLength, PetalWidth columns (dots,
// underscores and case are ignored in the header).  Other columns are skipped.
Dataset iris_load(const std::filesystem::path& path);

// y = SepalLength > mean(SepalLength); features SepalWidth, PetalLength, PetalWidth.
Dataset iris_binarize(const Dataset& iris);

// Seeded Fisher-Yates shuffle; first train_n indices train, the rest test.
Dataset split(const Dataset& data, std::size_t train_n, std::uint64_t seed);

std::string dataset_csv(const Dataset& data);
nlohmann::json dataset_manifest(const Dataset& data);

}  // namespace kgam
