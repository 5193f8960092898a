#pragma once

#include <stdexcept>
#include <string>

namespace polopt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Empty or too-small input where data is required.
class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error(what) {}
};

/// Data contains only one treatment arm; propensity fit is degenerate.
class DegenerateArmError : public Error {
 public:
  explicit DegenerateArmError(const std::string& what) : Error(what) {}
};

/// Rank-deficient design matrix in a least-squares fit.
class SingularDesignError : public Error {
 public:
  explicit SingularDesignError(const std::string& what) : Error(what) {}
};

/// Requested optimization problem has no feasible point.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

/// Cost vector contains NaN or infinity.
class InvalidCostError : public Error {
 public:
  explicit InvalidCostError(const std::string& what) : Error(what) {}
};

/// Covariance matrix fails symmetry / PSD checks.
class InvalidCovarianceError : public Error {
 public:
  explicit InvalidCovarianceError(const std::string& what) : Error(what) {}
};

/// Singular Jacobian; asymptotic variance undefined.
class SingularJacobianError : public Error {
 public:
  explicit SingularJacobianError(const std::string& what) : Error(what) {}
};

/// Cross-validation fold too small to fit the nuisance models.
class InsufficientFoldError : public Error {
 public:
  explicit InsufficientFoldError(const std::string& what) : Error(what) {}
};

/// Bad configuration (empty replicate set, invalid field, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Non-finite values encountered during optimization.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what) {}
};

}  // namespace polopt
