#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical routines.

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

inline Mat3 random_matrix(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = cd(nd(rng), nd(rng));
  }
  return m;
}

inline Mat3 random_traceless(std::mt19937_64& rng, double scale = 1.0) {
  Mat3 m = random_matrix(rng, scale);
  m -= (m.trace() / 3.0) * Mat3::Identity();
  return m;
}

/// Eigenvalues from a general complex eigensolver.
inline std::array<cd, 3> eigenvalues(const Mat3& m) {
  Eigen::ComplexEigenSolver<Mat3> es(m, false);
  const auto ev = es.eigenvalues();
  return {ev[0], ev[1], ev[2]};
}

/// Discriminant as the product of squared root differences.
inline cd discriminant_from_roots(const std::array<cd, 3>& r) {
  const cd a = r[0] - r[1];
  const cd b = r[0] - r[2];
  const cd c = r[1] - r[2];
  return a * a * b * b * c * c;
}

/// Greedy matching distance between two unordered root triples.
inline double root_set_distance(std::array<cd, 3> a, std::array<cd, 3> b) {
  double worst = 0.0;
  std::array<bool, 3> used{};
  for (const cd& x : a) {
    double best = 1e300;
    int bi = 0;
    for (int k = 0; k < 3; ++k) {
      if (!used[k] && std::abs(x - b[k]) < best) {
        best = std::abs(x - b[k]);
        bi = k;
      }
    }
    used[bi] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline MatX expm(const MatX& a) { return a.exp(); }
inline Mat3 expm3(const Mat3& a) { return a.exp(); }

/// Fixed-step classical Runge-Kutta for dU/dz = i M1(z) U, U(0) = 1.
inline std::vector<Mat3> rk4_propagator(const std::function<Mat3(double)>& m1,
                                        const std::vector<double>& z_out, int steps_per_unit) {
  const cd i(0.0, 1.0);
  std::vector<Mat3> out;
  Mat3 u = Mat3::Identity();
  double z = 0.0;
  for (const double target : z_out) {
    const int n = std::max(1, static_cast<int>(std::ceil((target - z) * steps_per_unit)));
    const double h = (target - z) / n;
    for (int k = 0; k < n; ++k) {
      const Mat3 k1 = i * m1(z) * u;
      const Mat3 k2 = i * m1(z + 0.5 * h) * (u + 0.5 * h * k1);
      const Mat3 k3 = i * m1(z + 0.5 * h) * (u + 0.5 * h * k2);
      const Mat3 k4 = i * m1(z + h) * (u + h * k3);
      u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      z += h;
    }
    z = target;
    out.push_back(u);
  }
  return out;
}

/// Occupation triples with total n, n1 descending then n2 descending.
inline std::vector<std::array<int, 3>> fock_states(int n) {
  std::vector<std::array<int, 3>> s;
  for (int n1 = n; n1 >= 0; --n1) {
    for (int n2 = n - n1; n2 >= 0; --n2) s.push_back({n1, n2, n - n1 - n2});
  }
  return s;
}

/// Bilinear sum_{jk} M_jk a_j^dag a_k built from truncated single-mode
/// ladder matrices on the full (n+1)^3 tensor space, then restricted to the
/// total-n block.
inline MatX fock_bilinear(const Mat3& m, int n) {
  const int d = n + 1;
  MatX a = MatX::Zero(d, d);
  for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const MatX id = MatX::Identity(d, d);
  const auto kron = [](const MatX& x, const MatX& y) {
    MatX r(x.rows() * y.rows(), x.cols() * y.cols());
    for (int i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < x.cols(); ++j) r.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
    return r;
  };
  const std::array<MatX, 3> ann = {kron(kron(a, id), id), kron(kron(id, a), id), kron(kron(id, id), a)};
  const int full = d * d * d;
  MatX h = MatX::Zero(full, full);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      if (m(j, k) != cd(0.0)) h += m(j, k) * ann[j].adjoint() * ann[k];
    }
  }
  const auto states = fock_states(n);
  const auto flat = [d](const std::array<int, 3>& s) { return (s[0] * d + s[1]) * d + s[2]; };
  const int dim = static_cast<int>(states.size());
  MatX out(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) out(r, c) = h(flat(states[r]), flat(states[c]));
  }
  return out;
}

/// Closed-form discriminant of the PT/cyclic trimer at gamma = 1.
inline double trimer_delta(double k1, double k2) {
  const double b2 = 1.0 - 2.0 * k1 * k1 - k2 * k2;
  const double b3 = -2.0 * k1 * k1 * k2;
  return -4.0 * b2 * b2 * b2 - 27.0 * b3 * b3;
}

/// Plain bisection on a sign-changing bracket.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
