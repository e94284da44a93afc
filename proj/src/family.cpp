#include "sl3/family.hpp"

#include <algorithm>
#include <cmath>

#include "sl3/algebra.hpp"

namespace sl3 {

namespace {

// Cubic Hermite on a non-uniform grid; slopes by centered finite differences
// (one-sided at the ends).
double hermite(const std::vector<double>& z, const std::vector<double>& v, double x) {
  const std::size_t n = z.size();
  if (n == 1 || x <= z.front()) return v.front();
  if (x >= z.back()) return v.back();
  const auto it = std::upper_bound(z.begin(), z.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - z.begin()) - 1;
  auto slope = [&](std::size_t i) {
    if (i == 0) return (v[1] - v[0]) / (z[1] - z[0]);
    if (i == n - 1) return (v[n - 1] - v[n - 2]) / (z[n - 1] - z[n - 2]);
    return (v[i + 1] - v[i - 1]) / (z[i + 1] - z[i - 1]);
  };
  const double h = z[k + 1] - z[k];
  const double t = (x - z[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * v[k] + h10 * h * slope(k) + h01 * v[k + 1] + h11 * h * slope(k + 1);
}

}  // namespace

Profile::Profile(double value) : kind_(Kind::Constant), value_(value) {}

Profile Profile::function(std::function<double(double)> f) {
  Profile p;
  p.kind_ = Kind::Function;
  p.fn_ = std::move(f);
  return p;
}

Profile Profile::sampled(std::vector<double> z, std::vector<double> values) {
  if (z.empty() || z.size() != values.size()) {
    throw ConfigError("sampled profile needs matching, non-empty grid and values");
  }
  if (!std::is_sorted(z.begin(), z.end()) ||
      std::adjacent_find(z.begin(), z.end()) != z.end()) {
    throw ConfigError("sampled profile grid must be strictly increasing");
  }
  Profile p;
  p.kind_ = Kind::Sampled;
  p.grid_ = std::make_shared<const std::vector<double>>(std::move(z));
  p.samples_ = std::make_shared<const std::vector<double>>(std::move(values));
  return p;
}

double Profile::operator()(double z) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Function:
      return fn_(z);
    case Kind::Sampled:
      return hermite(*grid_, *samples_, z);
  }
  return value_;
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::PTCyclic:
      return "pt_cyclic";
    case FamilyKind::Chiral1:
      return "chiral_1";
    case FamilyKind::Chiral2:
      return "chiral_2";
    case FamilyKind::Custom:
      return "custom";
  }
  return "custom";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "pt_cyclic") return FamilyKind::PTCyclic;
  if (name == "chiral_1") return FamilyKind::Chiral1;
  if (name == "chiral_2") return FamilyKind::Chiral2;
  if (name == "custom") return FamilyKind::Custom;
  throw ConfigError("unknown family '" + name + "'");
}

CouplerFamily::CouplerFamily(FamilyKind kind, std::map<std::string, Profile> params,
                             Generator gen, double z_min, double z_max)
    : kind_(kind), params_(std::move(params)), gen_(std::move(gen)), z_min_(z_min),
      z_max_(z_max) {}

CouplerFamily CouplerFamily::custom(Generator gen, double z_min, double z_max) {
  return CouplerFamily(FamilyKind::Custom, {}, std::move(gen), z_min, z_max);
}

CouplerFamily CouplerFamily::constant(const Mat3& m) {
  return custom([m](double) { return m; });
}

CouplerFamily CouplerFamily::sampled(std::vector<double> z, std::vector<Mat3> samples) {
  if (z.size() != samples.size() || z.empty()) {
    throw ConfigError("sampled family needs matching, non-empty grid and samples");
  }
  // One real profile per entry component.
  std::vector<Profile> parts;
  parts.reserve(18);
  for (int e = 0; e < 9; ++e) {
    std::vector<double> re(samples.size());
    std::vector<double> im(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      re[k] = samples[k](e).real();
      im[k] = samples[k](e).imag();
    }
    parts.push_back(Profile::sampled(z, re));
    parts.push_back(Profile::sampled(z, std::move(im)));
  }
  const double lo = z.front();
  const double hi = z.back();
  return custom(
      [parts = std::move(parts)](double x) {
        Mat3 m;
        for (int e = 0; e < 9; ++e) m(e) = cd(parts[2 * e](x), parts[2 * e + 1](x));
        return m;
      },
      lo, hi);
}

double CouplerFamily::parameter(const std::string& name, double z) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("family has no parameter '" + name + "'");
  return it->second(z);
}

Mat3 CouplerFamily::matrix(double z) const { return gen_(z); }

Mat3 CouplerFamily::traceless(double z) const { return traceless_part(gen_(z)); }

}  // namespace sl3
