#pragma once

#include <stdexcept>
#include <string>

namespace pdopt {

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct FactorizationError : std::runtime_error {
  explicit FactorizationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised when an iteration produces non-finite values or escapes the
// divergence guard. Carries the offending iteration index.
struct DivergenceError : std::runtime_error {
  int iteration;
  DivergenceError(const std::string& what, int iter)
      : std::runtime_error(what + " (iteration " + std::to_string(iter) + ")"),
        iteration(iter) {}
};

struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

struct CertificateError : std::runtime_error {
  explicit CertificateError(const std::string& what)
      : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pdopt
