#pragma once

#include <stdexcept>
#include <string>

namespace kgam {

// Exit codes used by the command-line tool.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, divergence = 3 };

// Argument outside the domain of a numerical routine (digits, psi, embedding).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent input data: CSV, schema, checkpoint.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace kgam
