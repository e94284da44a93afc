#include "sl3/algebra.hpp"

#include <cmath>
#include <functional>

namespace sl3 {

std::string to_string(Generator g) {
  switch (g) {
    case Generator::Ip:
      return "Ip";
    case Generator::Up:
      return "Up";
    case Generator::Vp:
      return "Vp";
    case Generator::I0:
      return "I0";
    case Generator::Y:
      return "Y";
    case Generator::Vm:
      return "Vm";
    case Generator::Um:
      return "Um";
    case Generator::Im:
      return "Im";
  }
  return "?";
}

bool is_cartan(Generator g) { return g == Generator::I0 || g == Generator::Y; }

double weight(Generator g) {
  if (g == Generator::I0) return 2.0;
  if (g == Generator::Y) return 1.5;
  return 1.0;
}

Mat3 elementary(int j, int k) {
  Mat3 m = Mat3::Zero();
  m(j, k) = 1.0;
  return m;
}

Mat3 generator_matrix(Generator g) {
  switch (g) {
    case Generator::I0: {
      Mat3 m = Mat3::Zero();
      m(0, 0) = 0.5;
      m(1, 1) = -0.5;
      return m;
    }
    case Generator::Y: {
      Mat3 m = Mat3::Zero();
      m(0, 0) = 1.0 / 3.0;
      m(1, 1) = 1.0 / 3.0;
      m(2, 2) = -2.0 / 3.0;
      return m;
    }
    case Generator::Ip:
      return elementary(0, 1);
    case Generator::Im:
      return elementary(1, 0);
    case Generator::Up:
      return elementary(1, 2);
    case Generator::Um:
      return elementary(2, 1);
    case Generator::Vp:
      return elementary(0, 2);
    case Generator::Vm:
      return elementary(2, 0);
  }
  return Mat3::Zero();
}

cd& GellMannCoefficients::operator[](Generator g) {
  switch (g) {
    case Generator::I0:
      return mu_I0;
    case Generator::Y:
      return mu_Y;
    case Generator::Ip:
      return mu_Ip;
    case Generator::Im:
      return mu_Im;
    case Generator::Up:
      return mu_Up;
    case Generator::Um:
      return mu_Um;
    case Generator::Vp:
      return mu_Vp;
    case Generator::Vm:
      return mu_Vm;
  }
  return mu_I0;
}

cd GellMannCoefficients::operator[](Generator g) const {
  return const_cast<GellMannCoefficients&>(*this)[g];
}

Mat3 traceless_part(const Mat3& m) {
  return m - (m.trace() / 3.0) * Mat3::Identity();
}

bool is_traceless(const Mat3& m, double tol) {
  return std::abs(m.trace()) <= tol * std::max(1.0, norm(m));
}

namespace {

struct SimpsonPanel {
  double a, b;
  cd fa, fm, fb, whole;
};

cd adaptive_simpson(const std::function<cd(double)>& f, const SimpsonPanel& p, double tol,
                    int depth) {
  const double m = 0.5 * (p.a + p.b);
  const double lm = 0.5 * (p.a + m);
  const double rm = 0.5 * (m + p.b);
  const cd flm = f(lm);
  const cd frm = f(rm);
  const cd left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
  const cd right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
  const cd delta = left + right - p.whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

cd gauge_phase(const CouplerFamily& family, double z, double tol) {
  if (z == 0.0) return 0.0;
  const auto trace = [&family](double zeta) {
    const cd t = family.matrix(zeta).trace();
    if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) {
      throw NumericalError("non-finite trace sample", zeta);
    }
    return t;
  };
  const double a = 0.0;
  const double b = z;
  const cd fa = trace(a);
  const cd fb = trace(b);
  const cd fm = trace(0.5 * (a + b));
  const SimpsonPanel whole{a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb)};
  return adaptive_simpson(trace, whole, 3.0 * tol, 40) / 3.0;
}

GellMannCoefficients decompose(const Mat3& m1) {
  if (!is_traceless(m1)) {
    throw NotTracelessError("decompose: input is not traceless; apply traceless_part first");
  }
  GellMannCoefficients c;
  c.mu_I0 = (m1 * generator_matrix(Generator::I0)).trace() * weight(Generator::I0);
  c.mu_Y = (m1 * generator_matrix(Generator::Y)).trace() * weight(Generator::Y);
  // Tr[M1 X-] picks the X+ entry and vice versa.
  c.mu_Ip = m1(0, 1);
  c.mu_Im = m1(1, 0);
  c.mu_Up = m1(1, 2);
  c.mu_Um = m1(2, 1);
  c.mu_Vp = m1(0, 2);
  c.mu_Vm = m1(2, 0);
  return c;
}

Mat3 reconstruct(const GellMannCoefficients& c) {
  Mat3 m = Mat3::Zero();
  for (const Generator g : kNormalOrder) m += c[g] * generator_matrix(g);
  return m;
}

Mat3 exp_generator(Generator g, cd alpha) {
  const Mat3 x = generator_matrix(g);
  if (!is_cartan(g)) return Mat3::Identity() + kI * alpha * x;
  Mat3 d = Mat3::Zero();
  for (int j = 0; j < 3; ++j) d(j, j) = std::exp(kI * alpha * x(j, j));
  return d;
}

Mat3 commutator(const Mat3& a, const Mat3& b) { return a * b - b * a; }

}  // namespace sl3
