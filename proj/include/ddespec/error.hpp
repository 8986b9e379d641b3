#pragma once

#include <stdexcept>
#include <string>

namespace ddespec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad user input or parameters; the CLI maps the whole family to exit code 2.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure inside a solver; exit code 3.
class SolverError : public Error {
  public:
    using Error::Error;
};

class DimensionError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class DomainError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

/// A model builder rejected its parameters (not a DDE, ill-posed kernel, ...).
class ModelError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class SingularMatrixError : public SolverError {
  public:
    SingularMatrixError(const std::string& what, double smallest_pivot)
        : SolverError(what), smallest_pivot_(smallest_pivot) {}
    double smallest_pivot() const noexcept { return smallest_pivot_; }

  private:
    double smallest_pivot_;
};

class PoleError : public SolverError {
  public:
    using SolverError::SolverError;
};

/// The characteristic matrix is singular at the evaluation point.
class OnZeroError : public SolverError {
  public:
    using SolverError::SolverError;
};

class ContourAccuracyError : public SolverError {
  public:
    using SolverError::SolverError;
};

class JitterExhaustedError : public SolverError {
  public:
    using SolverError::SolverError;
};

class MissingRootError : public SolverError {
  public:
    MissingRootError(const std::string& what, double re_min, double re_max, double im_min,
                     double im_max)
        : SolverError(what), box_{re_min, re_max, im_min, im_max} {}
    struct Box {
        double re_min, re_max, im_min, im_max;
    };
    const Box& box() const noexcept { return box_; }

  private:
    Box box_;
};

/// Evaluation requested at an excluded frequency of a spectral curve.
class SingularityError : public SolverError {
  public:
    SingularityError(const std::string& what, std::string kind)
        : SolverError(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

class DegenerateCurveError : public SolverError {
  public:
    using SolverError::SolverError;
};

class BracketError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

/// Integration step does not divide the delay window; exit code 4.
class AlignmentError : public Error {
  public:
    AlignmentError(const std::string& what, double suggested_h)
        : Error(what), suggested_h_(suggested_h) {}
    double suggested_h() const noexcept { return suggested_h_; }

  private:
    double suggested_h_;
};

class HorizonError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

}  // namespace ddespec
