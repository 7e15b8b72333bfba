#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tiltsmooth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite input, non-positive dose and similar argument problems.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Raised when a query point has no data with nonzero kernel weight.
class EmptyNeighborhood : public Error {
public:
  explicit EmptyNeighborhood(double x)
      : Error(message(x)), x_(x) {}

  double x() const noexcept { return x_; }

private:
  static std::string message(double x) {
    std::ostringstream os;
    os.precision(17);
    os << "empty kernel neighborhood at x = " << x
       << " (bandwidth too small or x outside the data range)";
    return os.str();
  }
  double x_;
};

/// Local linear denominator vanished (too few distinct points in the window).
class DegenerateDesign : public Error {
public:
  explicit DegenerateDesign(const std::string& what) : Error(what) {}
  DegenerateDesign(const std::string& what, double x) : Error(what), x_(x) {}

  double x() const noexcept { return x_; }

private:
  double x_ = 0.0;
};

/// Flat-top kernel sum too close to zero to normalize.
class UnstableDenominator : public Error {
public:
  UnstableDenominator(double x, double denominator)
      : Error(message(x, denominator)), x_(x) {}

  double x() const noexcept { return x_; }

private:
  static std::string message(double x, double d) {
    std::ostringstream os;
    os.precision(17);
    os << "unstable flat-top denominator " << d << " at x = " << x;
    return os.str();
  }
  double x_;
};

class BandwidthInfeasible : public Error {
public:
  using Error::Error;
};

class ZeroTilt : public Error {
public:
  ZeroTilt() : Error("all interpolated tilt values are zero") {}
};

/// Tilted fit or comparator failed at one of the quadrature points.
class ObjectiveInfeasible : public Error {
public:
  ObjectiveInfeasible(double x, const std::string& cause)
      : Error(message(x, cause)), x_(x) {}

  double x() const noexcept { return x_; }

private:
  static std::string message(double x, const std::string& cause) {
    std::ostringstream os;
    os.precision(17);
    os << "objective infeasible at grid point " << x << ": " << cause;
    return os.str();
  }
  double x_;
};

class OptimizerFailed : public Error {
public:
  using Error::Error;
};

class InsufficientDesign : public Error {
public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

class LookupError : public Error {
public:
  using Error::Error;
};

/// Config schema violation; `path()` names the offending field.
class ConfigError : public Error {
public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace tiltsmooth
