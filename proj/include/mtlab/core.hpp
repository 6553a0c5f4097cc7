#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation requires a different spatial dimension (e.g. 1D-only routines).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input exceeds the size an exact solver is willing to handle.
class ScaleError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the representable or admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible triangular mesh.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Invalid study / CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure to read or write a file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Neumaier-compensated accumulator. Summation order is the caller's
/// responsibility; the result is deterministic for a fixed order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }
inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

}  // namespace mtlab
