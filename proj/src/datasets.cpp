#include "kgam/datasets.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kgam/errors.hpp"
#include "kgam/rng.hpp"

namespace kgam {

namespace {

constexpr std::size_t kIrisRows = 150;
constexpr std::uint64_t kSplitStream = 3;

std::string canonical_header(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    const auto first = cell.find_first_not_of(' ');
    cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + cell + "'");
  }
  return v;
}

}  // namespace

Eigen::MatrixXd Dataset::features_of(std::span<const std::size_t> idx) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd Dataset::targets_of(std::span<const std::size_t> idx) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(y.size()) != rows()) throw DataError("target length differs from row count");
  if (feature_names.size() != features()) throw DataError("feature name count differs from column count");
  std::vector<int> seen(rows(), 0);
  for (auto i : train_idx) {
    if (i >= rows() || seen[i]++) throw DataError("split indices are not a partition");
  }
  for (auto i : test_idx) {
    if (i >= rows() || seen[i]++) throw DataError("split indices are not a partition");
  }
  if (train_idx.size() + test_idx.size() != rows()) throw DataError("split indices do not cover every row");
  if (binary_target) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) throw DataError("binary target must be 0 or 1");
    }
  }
}

double friedman_mu(std::span<const double> x) {
  if (x.size() < 5) throw DataError("Friedman #1 needs 5 inputs");
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

Dataset friedman_generate(std::size_t n, std::uint64_t seed, double noise_sd) {
  if (n < 1) throw ConfigError("Friedman generator needs n >= 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  Dataset ds;
  ds.feature_names = {"x1", "x2", "x3", "x4", "x5"};
  ds.target_name = "y";
  ds.X.resize(static_cast<Eigen::Index>(n), 5);
  ds.y.resize(static_cast<Eigen::Index>(n));
  SplitMix64 rng(seed);
  double row[5];
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) {
      row[j] = rng.uniform();
      ds.X(static_cast<Eigen::Index>(i), j) = row[j];
    }
    const double eps = rng.normal();
    ds.y(static_cast<Eigen::Index>(i)) = friedman_mu(row) + noise_sd * eps;
  }
  ds.train_idx.resize(n);
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), std::size_t{0});
  ds.provenance = {{"generator", "friedman1"}, {"n", n}, {"seed", seed}, {"noise_sd", noise_sd}};
  return ds;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset iris_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  if (bytes.empty()) throw DataError("'" + path.string() + "' is empty");

  std::istringstream lines(bytes);
  std::string line;
  if (!std::getline(lines, line)) throw DataError("'" + path.string() + "' has no header");
  const auto header = split_csv_line(line);
  const std::vector<std::string> wanted{"sepallength", "sepalwidth", "petallength", "petalwidth"};
  const std::vector<std::string> names{"SepalLength", "SepalWidth", "PetalLength", "PetalWidth"};
  std::vector<std::size_t> column(wanted.size());
  for (std::size_t w = 0; w < wanted.size(); ++w) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return canonical_header(h) == wanted[w]; });
    if (it == header.end()) throw DataError("missing column " + names[w] + " in '" + path.string() + "'");
    column[w] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::array<double, 4>> rows;
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    std::array<double, 4> r{};
    for (std::size_t w = 0; w < 4; ++w) r[w] = parse_number(cells[column[w]], line_no);
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("'" + path.string() + "' has no data rows");

  Dataset ds;
  ds.feature_names = names;
  ds.target_name = "";
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 4; ++j) ds.X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  ds.train_idx.resize(rows.size());
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), std::size_t{0});
  ds.provenance = {{"source", path.string()}, {"fnv1a64", fnv1a_hex(bytes)}, {"rows", rows.size()}};
  if (rows.size() != kIrisRows) {
    ds.warnings.push_back("expected " + std::to_string(kIrisRows) + " iris rows, read " +
                          std::to_string(rows.size()));
  }
  return ds;
}

Dataset iris_binarize(const Dataset& iris) {
  if (iris.features() != 4 || iris.feature_names.front() != "SepalLength") {
    throw DataError("iris_binarize expects the four raw iris measurements");
  }
  const double mean = iris.X.col(0).mean();
  Dataset ds;
  ds.feature_names = {"SepalWidth", "PetalLength", "PetalWidth"};
  ds.target_name = "SepalLengthAboveMean";
  ds.binary_target = true;
  ds.X = iris.X.rightCols(3);
  ds.y.resize(iris.X.rows());
  for (Eigen::Index i = 0; i < iris.X.rows(); ++i) ds.y(i) = iris.X(i, 0) > mean ? 1.0 : 0.0;
  ds.train_idx.resize(ds.rows());
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), std::size_t{0});
  ds.provenance = iris.provenance;
  ds.provenance["sepal_length_mean"] = mean;
  ds.warnings = iris.warnings;
  return ds;
}

Dataset split(const Dataset& data, std::size_t train_n, std::uint64_t seed) {
  const std::size_t n = data.rows();
  if (train_n < 1 || train_n >= n) {
    throw ConfigError("train_n must satisfy 1 <= train_n < n (train_n=" + std::to_string(train_n) +
                      ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng = derive_stream(seed, kSplitStream);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.index(i + 1)]);
  }
  Dataset out = data;
  out.train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  out.test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());
  out.provenance["split"] = {{"train_n", train_n}, {"seed", seed}};
  return out;
}

std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (const auto& name : data.feature_names) out += name + ",";
  out += (data.target_name.empty() ? "y" : data.target_name) + "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", data.X(i, j));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", data.y(i));
    out += buf;
  }
  return out;
}

nlohmann::json dataset_manifest(const Dataset& data) {
  return {{"features", data.feature_names},
          {"target", data.target_name},
          {"rows", data.rows()},
          {"binary_target", data.binary_target},
          {"provenance", data.provenance},
          {"train_idx", data.train_idx},
          {"test_idx", data.test_idx},
          {"warnings", data.warnings}};
}

}  // namespace kgam
