#pragma once

#include <stdexcept>
#include <string>

namespace gffforge {

/// Argument outside the domain where an operation is defined
/// (point outside the model domain, radius out of range, ...).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string &what) : std::domain_error(what) {}
};

/// A lattice is too coarse (or too small) to resolve the requested object.
class ResolutionError : public std::runtime_error {
public:
  explicit ResolutionError(const std::string &what) : std::runtime_error(what) {}
};

/// Factorization or quadrature failure.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

/// Evaluation of a kernel exactly on its singular set.
class SingularityError : public DomainError {
public:
  explicit SingularityError(const std::string &what) : DomainError(what) {}
};

} // namespace gffforge
