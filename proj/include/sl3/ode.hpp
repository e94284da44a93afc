#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sl3/types.hpp"

namespace sl3::ode {

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h0 = 0.0;  // 0: automatic initial step
  double h_max = 0.0;  // 0: unbounded
  long max_steps = 5'000'000;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
};

/// Outcome of one integration call.
struct Outcome {
  double z_end = 0.0;  // where integration stopped
  VecX y_end;
  bool stopped_early = false;  // the step observer requested a stop
  Stats stats;
};

using Rhs = std::function<void(double z, const VecX& y, VecX& dydz)>;
/// Called after every accepted step; returning false stops the integration
/// at that step end.
using StepObserver = std::function<bool(double z, const VecX& y)>;
/// Receives the dense-output value at each requested sample point.
using SampleSink = std::function<void(std::size_t index, double z, const VecX& y)>;

/// Dormand-Prince 5(4) with the standard fourth-order continuous extension.
/// Samples must be non-decreasing and lie in [z0, z1]; each is reported
/// exactly once. Throws NumericalError on step-size underflow, non-finite
/// state, or step-count exhaustion. The local error target is one tenth of
/// the requested tolerances.
inline Outcome integrate_dopri5(const Rhs& f, VecX y, double z0, double z1,
                                std::span<const double> samples, const Options& opt,
                                const SampleSink& sink = {}, const StepObserver& observer = {}) {
  // Butcher tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Dense output coefficients (Hairer, Norsett, Wanner).
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  Outcome out;
  const auto n = y.size();
  const double dir = (z1 >= z0) ? 1.0 : -1.0;
  std::size_t next_sample = 0;
  const auto emit_until = [&](double z_lo, double z_hi, const auto& value_at) {
    while (next_sample < samples.size()) {
      const double zs = samples[next_sample];
      if (dir * (zs - z_hi) > 0.0) break;
      if (dir * (zs - z_lo) >= 0.0 && sink) sink(next_sample, zs, value_at(zs));
      ++next_sample;
    }
  };

  VecX k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  double z = z0;
  f(z, y, k1);
  emit_until(z0, z0, [&](double) { return y; });

  const auto err_norm = [&](const VecX& y_old, const VecX& y_new, const VecX& e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = 0.1 * (opt.atol + opt.rtol * std::max(std::abs(y_old[i]), std::abs(y_new[i])));
      const double r = std::abs(e[i]) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  };

  double h = opt.h0;
  if (h == 0.0) {
    const double d0 = err_norm(y, y, y);
    const double dd1 = err_norm(y, y, k1);
    h = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h = std::min(h, std::abs(z1 - z0));
    if (h == 0.0) h = 1e-6;
  }
  h = std::abs(h);
  const double h_max = opt.h_max > 0.0 ? opt.h_max : std::abs(z1 - z0);
  double err_prev = 1e-4;

  long steps = 0;
  while (dir * (z1 - z) > 0.0) {
    if (++steps > opt.max_steps) throw NumericalError("integrator: step budget exhausted", z);
    h = std::min(h, h_max);
    bool last = false;
    if (h >= std::abs(z1 - z)) {
      h = std::abs(z1 - z);
      last = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(z))) {
      throw NumericalError("integrator: step size underflow", z);
    }
    const double hs = dir * h;
    ytmp = y + hs * (a21 * k1);
    f(z + c2 * hs, ytmp, k2);
    ytmp = y + hs * (a31 * k1 + a32 * k2);
    f(z + c3 * hs, ytmp, k3);
    ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(z + c4 * hs, ytmp, k4);
    ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(z + c5 * hs, ytmp, k5);
    ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(z + hs, ytmp, k6);
    ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double z_new = last ? z1 : z + hs;
    f(z_new, ynew, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = err_norm(y, ynew, err);
    if (!std::isfinite(en)) en = std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      bool finite = true;
      for (Eigen::Index i = 0; i < n && finite; ++i) {
        finite = std::isfinite(ynew[i].real()) && std::isfinite(ynew[i].imag());
      }
      if (!finite) throw NumericalError("integrator: non-finite state", z_new);

      // Continuous extension on [z, z_new].
      const VecX r1 = y;
      const VecX r2 = ynew - y;
      const VecX r3 = hs * k1 - r2;
      const VecX r4 = r2 - hs * k7 - r3;
      const VecX r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      const double z_old = z;
      emit_until(z_old, z_new, [&](double zs) -> VecX {
        const double th = (zs - z_old) / hs;
        const double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
      });

      y = ynew;
      k1 = k7;
      z = z_new;
      ++out.stats.accepted;
      if (observer && !observer(z, y)) {
        out.stopped_early = true;
        break;
      }
      // PI step control.
      const double e_use = std::max(en, 1e-10);
      double fac = 0.9 * std::pow(e_use, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 10.0);
      h *= fac;
      err_prev = std::max(en, 1e-4);
    } else {
      ++out.stats.rejected;
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.1;
      h *= fac;
    }
  }
  out.z_end = z;
  out.y_end = y;
  return out;
}

}  // namespace sl3::ode
