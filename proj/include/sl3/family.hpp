#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sl3/types.hpp"

namespace sl3 {

/// A real parameter as a function of propagation distance: a constant, an
/// analytic callable, or a sampled grid with piecewise-cubic interpolation.
class Profile {
public:
  Profile() : Profile(0.0) {}
  Profile(double value);  // NOLINT(google-explicit-constructor)

  static Profile function(std::function<double(double)> f);
  /// Cubic Hermite interpolation through (z, value) with finite-difference
  /// slopes. Outside the grid the end values are held.
  static Profile sampled(std::vector<double> z, std::vector<double> values);

  double operator()(double z) const;
  bool is_constant() const { return kind_ == Kind::Constant; }
  double constant_value() const { return value_; }

private:
  enum class Kind { Constant, Function, Sampled };
  Kind kind_ = Kind::Constant;
  double value_ = 0.0;
  std::function<double(double)> fn_;
  std::shared_ptr<const std::vector<double>> grid_;
  std::shared_ptr<const std::vector<double>> samples_;
};

enum class FamilyKind { PTCyclic, Chiral1, Chiral2, Custom };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// z-parameterized generator of 3x3 complex coupling matrices.
///
/// matrix(z) returns the raw coupling matrix M(z); traceless(z) the gauge
/// reduced M1(z). The named families are traceless by construction.
class CouplerFamily {
public:
  using Generator = std::function<Mat3(double)>;

  CouplerFamily(FamilyKind kind, std::map<std::string, Profile> params, Generator gen,
                double z_min = 0.0, double z_max = 0.0);

  /// Custom family from an arbitrary callable.
  static CouplerFamily custom(Generator gen, double z_min = 0.0, double z_max = 0.0);
  /// Constant matrix for all z.
  static CouplerFamily constant(const Mat3& m);
  /// Custom family from matrix samples on an increasing z grid, interpolated
  /// entrywise with piecewise cubics.
  static CouplerFamily sampled(std::vector<double> z, std::vector<Mat3> samples);

  FamilyKind kind() const { return kind_; }
  const std::map<std::string, Profile>& parameters() const { return params_; }
  /// Value of a named scalar parameter at z. Throws ConfigError if absent.
  double parameter(const std::string& name, double z) const;
  bool has_parameter(const std::string& name) const { return params_.count(name) != 0; }

  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }

  Mat3 matrix(double z) const;
  Mat3 traceless(double z) const;

private:
  FamilyKind kind_;
  std::map<std::string, Profile> params_;
  Generator gen_;
  double z_min_;
  double z_max_;
};

}  // namespace sl3
