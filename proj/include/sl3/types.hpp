#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sl3 {

using cd = std::complex<double>;

/// 3x3 complex coupling matrix. Entries are in coupling units; z is measured
/// in inverse coupling units.
using Mat3 = Eigen::Matrix3cd;
using Vec3 = Eigen::Vector3cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

inline constexpr cd kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input matrix was expected to be traceless.
class NotTracelessError : public Error {
public:
  using Error::Error;
};

/// Local similarity frame does not exist (exceptional point or a vanishing
/// principal minor of the eigenvector matrix).
class FrameSingularError : public Error {
public:
  FrameSingularError(const std::string& what, double z)
      : Error(what + " (z = " + std::to_string(z) + ")"), z_(z) {}
  double z() const { return z_; }

private:
  double z_;
};

/// Integration or quadrature failure at a specific propagation coordinate.
class NumericalError : public Error {
public:
  NumericalError(const std::string& what, double z)
      : Error(what + " (z = " + std::to_string(z) + ")"), z_(z) {}
  double z() const { return z_; }

private:
  double z_;
};

/// Malformed input: bad parameter, bad config field, empty state, ...
class ConfigError : public Error {
public:
  using Error::Error;
};

inline bool all_finite(const Mat3& m) {
  for (int i = 0; i < 9; ++i) {
    if (!std::isfinite(m(i).real()) || !std::isfinite(m(i).imag())) return false;
  }
  return true;
}

/// Frobenius norm, the library-wide matrix scale.
inline double norm(const Mat3& m) { return m.norm(); }

}  // namespace sl3
