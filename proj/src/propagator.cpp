#include "sl3/propagator.hpp"

#include <algorithm>
#include <cmath>

#include "sl3/ode.hpp"
#include "sl3/spectral.hpp"

namespace sl3 {

cd& WeiNormanCoords::operator[](Generator g) {
  switch (g) {
    case Generator::Ip:
      return v_Ip;
    case Generator::Up:
      return v_Up;
    case Generator::Vp:
      return v_Vp;
    case Generator::I0:
      return v_I0;
    case Generator::Y:
      return v_Y;
    case Generator::Vm:
      return v_Vm;
    case Generator::Um:
      return v_Um;
    case Generator::Im:
      return v_Im;
  }
  return v_Ip;
}

cd WeiNormanCoords::operator[](Generator g) const {
  return const_cast<WeiNormanCoords&>(*this)[g];
}

VecX WeiNormanCoords::to_vector() const {
  VecX v(8);
  for (std::size_t k = 0; k < kNormalOrder.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = (*this)[kNormalOrder[k]];
  }
  return v;
}

WeiNormanCoords WeiNormanCoords::from_vector(const VecX& v) {
  WeiNormanCoords c;
  for (std::size_t k = 0; k < kNormalOrder.size(); ++k) {
    c[kNormalOrder[k]] = v[static_cast<Eigen::Index>(k)];
  }
  return c;
}

WeiNormanCoords wei_norman_rhs(const WeiNormanCoords& v, const Mat3& mu) {
  const cd m11 = mu(0, 0), m12 = mu(0, 1), m13 = mu(0, 2);
  const cd m21 = mu(1, 0), m22 = mu(1, 1), m23 = mu(1, 2);
  const cd m31 = mu(2, 0), m32 = mu(2, 1);
  const cd ip = v.v_Ip, vp = v.v_Vp, up = v.v_Up;
  const cd i = kI;

  WeiNormanCoords d;
  // Coupled Riccati pair.
  const cd quad = m21 * ip + m31 * vp;
  d.v_Ip = m12 + i * ((m11 - m22) * ip - m32 * vp) + ip * quad;
  d.v_Vp = m13 + i * (-m23 * ip + (2.0 * m11 + m22) * vp) + vp * quad;
  // Scalar Riccati equation.
  d.v_Up = m23 + i * m21 * vp + (i * m11 + 2.0 * i * m22 - m21 * ip + m31 * vp) * up +
           (m32 + i * m31 * ip) * up * up;
  // Linear equations.
  d.v_I0 = m11 - m22 - m31 * ip * up - i * (2.0 * m21 * ip + m31 * vp - m32 * up);
  d.v_Y = 1.5 * (m11 + m22 - i * (m32 * up + m31 * vp) + m31 * ip * up);
  const cd half_i0 = std::exp(0.5 * i * v.v_I0);
  d.v_Vm = half_i0 * (m31 * std::exp(i * v.v_Y) - half_i0 * (i * m21 + m31 * up) * v.v_Um);
  d.v_Um = std::exp(-0.5 * i * v.v_I0 + i * v.v_Y) * (m32 + i * m31 * ip);
  d.v_Im = std::exp(i * v.v_I0) * (m21 - i * m31 * up);
  return d;
}

Mat3 reconstruct_U(const WeiNormanCoords& v) {
  Mat3 u = Mat3::Identity();
  for (const Generator g : kNormalOrder) u = u * exp_generator(g, v[g]);
  return u;
}

std::vector<double> uniform_grid(double z_end, std::size_t n) {
  std::vector<double> z(std::max<std::size_t>(n, 2));
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = z_end * static_cast<double>(k) / static_cast<double>(z.size() - 1);
  }
  z.back() = z_end;
  return z;
}

namespace {

void check_samples(std::span<const double> z) {
  if (z.empty()) throw ConfigError("propagation needs at least one sample point");
  if (z.front() < 0.0) throw ConfigError("propagation samples must be >= 0");
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (z[k] < z[k - 1]) throw ConfigError("propagation samples must be non-decreasing");
  }
}

Mat3 checked_traceless(const CouplerFamily& family, double z) {
  const Mat3 m1 = family.traceless(z);
  if (!all_finite(m1)) throw NumericalError("non-finite coupling matrix", z);
  return m1;
}

// Largest factor entry of the chart, and the variable responsible.
std::pair<double, Generator> chart_size(const WeiNormanCoords& v) {
  double worst = 0.0;
  Generator which = Generator::Ip;
  for (const Generator g : kNormalOrder) {
    double s = 0.0;
    if (is_cartan(g)) {
      const Mat3 x = generator_matrix(g);
      for (int j = 0; j < 3; ++j) {
        s = std::max(s, std::exp(std::abs((v[g] * x(j, j)).imag())));
      }
    } else {
      s = std::abs(v[g]);
    }
    if (s > worst) {
      worst = s;
      which = g;
    }
  }
  return {worst, which};
}

}  // namespace

PropagationResult integrate_wei_norman(const CouplerFamily& family,
                                       std::span<const double> z_samples,
                                       const PropagatorOptions& opts) {
  check_samples(z_samples);
  PropagationResult res;
  res.z_samples.assign(z_samples.begin(), z_samples.end());
  res.coords.resize(z_samples.size());
  res.chart.resize(z_samples.size());
  res.U.resize(z_samples.size());
  res.chart_base.push_back(Mat3::Identity());

  const ode::Rhs rhs = [&family](double z, const VecX& y, VecX& dy) {
    dy = wei_norman_rhs(WeiNormanCoords::from_vector(y), checked_traceless(family, z)).to_vector();
  };
  ode::Options o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;

  const double z_end = z_samples.back();
  double z = 0.0;
  std::size_t first_pending = 0;
  // Samples at z = 0 sit on the identity.
  while (first_pending < z_samples.size() && z_samples[first_pending] == 0.0) {
    res.U[first_pending] = Mat3::Identity();
    ++first_pending;
  }
  Generator culprit = Generator::Ip;
  while (first_pending < z_samples.size()) {
    const std::size_t chart_index = res.chart_base.size() - 1;
    const Mat3 base = res.chart_base.back();
    const ode::SampleSink sink = [&](std::size_t i, double, const VecX& y) {
      const std::size_t k = first_pending + i;
      res.coords[k] = WeiNormanCoords::from_vector(y);
      res.chart[k] = chart_index;
      res.U[k] = reconstruct_U(res.coords[k]) * base;
    };
    std::size_t emitted_upto = first_pending;
    const ode::SampleSink counting_sink = [&](std::size_t i, double zs, const VecX& y) {
      sink(i, zs, y);
      emitted_upto = std::max(emitted_upto, first_pending + i + 1);
    };
    const ode::StepObserver observer = [&](double, const VecX& y) {
      const auto [size, which] = chart_size(WeiNormanCoords::from_vector(y));
      culprit = which;
      return size <= opts.chart_bound;
    };
    const auto remaining = z_samples.subspan(first_pending);
    const ode::Outcome out = ode::integrate_dopri5(rhs, VecX::Zero(8), z, z_end, remaining, o,
                                                   counting_sink, observer);
    first_pending = emitted_upto;
    if (!out.stopped_early) break;
    // Stitch the next chart onto the group element reached so far.
    z = out.z_end;
    res.blowup_events.push_back({z, culprit});
    res.chart_base.push_back(reconstruct_U(WeiNormanCoords::from_vector(out.y_end)) * base);
  }
  return res;
}

PropagationResult integrate_wei_norman(const CouplerFamily& family, double z_end, double tol,
                                       std::size_t n_samples) {
  PropagatorOptions o;
  o.rtol = tol;
  o.atol = 1e-2 * tol;
  const auto grid = uniform_grid(z_end, n_samples);
  return integrate_wei_norman(family, grid, o);
}

DirectResult integrate_direct(const CouplerFamily& family, std::span<const double> z_samples,
                              const PropagatorOptions& opts) {
  check_samples(z_samples);
  DirectResult res;
  res.z_samples.assign(z_samples.begin(), z_samples.end());
  res.U.resize(z_samples.size(), Mat3::Identity());

  const ode::Rhs rhs = [&family](double z, const VecX& y, VecX& dy) {
    const Eigen::Map<const Mat3> u(y.data());
    Mat3 du = kI * checked_traceless(family, z) * u;
    dy = Eigen::Map<const VecX>(du.data(), 9);
  };
  ode::Options o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  Mat3 id = Mat3::Identity();
  const VecX y0 = Eigen::Map<const VecX>(id.data(), 9);
  ode::integrate_dopri5(rhs, y0, 0.0, z_samples.back(), z_samples, o,
                        [&res](std::size_t i, double, const VecX& y) {
                          res.U[i] = Eigen::Map<const Mat3>(y.data());
                        });
  return res;
}

DirectResult integrate_direct(const CouplerFamily& family, double z_end, double tol,
                              std::size_t n_samples) {
  PropagatorOptions o;
  o.rtol = tol;
  o.atol = 1e-2 * tol;
  const auto grid = uniform_grid(z_end, n_samples);
  return integrate_direct(family, grid, o);
}

Mat3 expm(const Mat3& a) {
  const double n = a.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
  int s = 0;
  if (n > 0.5) s = static_cast<int>(std::ceil(std::log2(n / 0.5)));
  const Mat3 b = a / std::ldexp(1.0, s);
  // Taylor series of the scaled matrix, |b| <= 1/2: 20 terms reach rounding.
  Mat3 result = Mat3::Identity();
  Mat3 term = Mat3::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
  }
  for (int k = 0; k < s; ++k) result = result * result;
  return result;
}

Mat3 exp_constant(const Mat3& m1, double z) { return expm(kI * z * m1); }

Mat3 holonomy_product(const CouplerFamily& family, double loop_length, int steps, double eps,
                      bool* branches_closed) {
  if (steps < 1) throw ConfigError("holonomy: steps must be positive");
  const double dz = loop_length / steps;
  // Frames at nodes (even indices) and midpoints (odd indices), in path order.
  const int points = 2 * steps + 1;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int p = 0; p < points; ++p) grid[static_cast<std::size_t>(p)] = 0.5 * dz * p;
  BranchTrackOptions topts;
  topts.eps = eps;
  const BranchTrack track = track_branches(family, grid, topts);
  for (const BranchEvent& e : track.events) {
    if (e.kind != BranchEventKind::Ambiguous) {
      throw FrameSingularError("holonomy: exceptional point on the loop (" + to_string(e.kind) + ")", e.z);
    }
  }
  const Roots start_order = track.paths.front();
  const Roots order = track.paths.back();
  std::vector<Mat3> T(static_cast<std::size_t>(points));
  std::vector<Mat3> T_inv(static_cast<std::size_t>(points));
  std::size_t ti = 0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    while (track.z[ti] != grid[p]) ++ti;
    const SpectralFrame f = local_frame(family.traceless(grid[p]), grid[p], track.paths[ti], eps);
    T[p] = f.T;
    T_inv[p] = f.T_inv;
  }
  if (branches_closed != nullptr) {
    bool closed = true;
    double scale = 0.0;
    for (const cd& r : start_order) scale = std::max(scale, std::abs(r));
    for (std::size_t b = 0; b < 3; ++b) {
      closed = closed && std::abs(order[b] - start_order[b]) <= 1e-8 * std::max(scale, 1.0);
    }
    *branches_closed = closed;
  }
  Mat3 h = Mat3::Identity();
  for (int k = 0; k < steps; ++k) {
    const auto lo = static_cast<std::size_t>(2 * k);
    const Mat3 dT = (T[lo + 2] - T[lo]) / dz;
    Mat3 a = kI * T_inv[lo + 1] * dT;
    // The exact connection is traceless; remove the discretization residue.
    a -= (a.trace() / 3.0) * Mat3::Identity();
    h = expm(a * dz) * h;
  }
  return h;
}

HolonomyResult holonomy(const CouplerFamily& family, double loop_length,
                        const HolonomyOptions& opts) {
  if (opts.steps < 4) throw ConfigError("holonomy: need at least 4 steps");
  const Mat3 m_start = family.traceless(0.0);
  const Mat3 m_end = family.traceless(loop_length);
  if ((m_start - m_end).norm() > 1e-12 * std::max(1.0, norm(m_start))) {
    throw ConfigError("holonomy: path is not closed");
  }
  HolonomyResult r;
  r.steps = opts.steps;
  r.H = holonomy_product(family, loop_length, opts.steps, opts.eps, &r.branches_closed);
  const Mat3 h2 = holonomy_product(family, loop_length, opts.steps / 2, opts.eps);
  const Mat3 h4 = holonomy_product(family, loop_length, opts.steps / 4, opts.eps);
  r.delta_fine = (r.H - h2).cwiseAbs().maxCoeff();
  r.delta_coarse = (h2 - h4).cwiseAbs().maxCoeff();
  r.convergence_ratio = r.delta_fine > 0.0 ? r.delta_coarse / r.delta_fine : 0.0;
  const cd l1 = std::log(r.H(0, 0));
  const cd l2 = std::log(r.H(1, 1));
  r.theta_I0 = -kI * (l1 - l2);
  r.theta_Y = -kI * 1.5 * (l1 + l2);
  return r;
}

}  // namespace sl3
