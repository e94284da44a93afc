#include "sl3/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sl3 {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Distinct:
      return "Distinct";
    case Regime::EP2:
      return "EP2";
    case Regime::EP3:
      return "EP3";
    case Regime::ZeroMatrix:
      return "ZeroMatrix";
  }
  return "?";
}

std::string to_string(BranchEventKind k) {
  switch (k) {
    case BranchEventKind::EP2:
      return "EP2";
    case BranchEventKind::EP3:
      return "EP3";
    case BranchEventKind::ZeroMatrix:
      return "ZeroMatrix";
    case BranchEventKind::Ambiguous:
      return "Ambiguous";
  }
  return "?";
}

Invariants invariants(const Mat3& m1) {
  if (!is_traceless(m1)) throw NotTracelessError("invariants: input is not traceless");
  const Mat3 m2 = m1 * m1;
  return {-0.5 * m2.trace(), -(m2 * m1).trace() / 3.0};
}

std::vector<cd> characteristic_coefficients(const MatX& m) {
  const auto n = static_cast<int>(m.rows());
  std::vector<cd> traces(static_cast<std::size_t>(n) + 1);
  MatX power = MatX::Identity(n, n);
  for (int j = 1; j <= n; ++j) {
    power = power * m;
    traces[static_cast<std::size_t>(j)] = power.trace();
  }
  std::vector<cd> beta(static_cast<std::size_t>(n) + 1);
  beta[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    cd acc = 0.0;
    for (int j = 1; j <= k; ++j) {
      acc += beta[static_cast<std::size_t>(k - j)] * traces[static_cast<std::size_t>(j)];
    }
    beta[static_cast<std::size_t>(k)] = -acc / static_cast<double>(k);
  }
  return beta;
}

cd discriminant(const Invariants& inv) {
  return -4.0 * inv.beta2 * inv.beta2 * inv.beta2 - 27.0 * inv.beta3 * inv.beta3;
}

cd discriminant_resultant(std::span<const cd> coeffs) {
  if (coeffs.empty() || coeffs.front() == cd(0.0)) {
    throw ConfigError("discriminant_resultant: leading coefficient must be nonzero");
  }
  const int n = static_cast<int>(coeffs.size()) - 1;
  if (n < 1) throw ConfigError("discriminant_resultant: degree must be at least 1");
  if (n == 1) return 1.0;
  // p' coefficients, highest degree first.
  std::vector<cd> dp(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    dp[static_cast<std::size_t>(k)] = coeffs[static_cast<std::size_t>(k)] * static_cast<double>(n - k);
  }
  // Sylvester matrix: n-1 shifted rows of p, n shifted rows of p'.
  const int size = 2 * n - 1;
  MatX s = MatX::Zero(size, size);
  for (int r = 0; r < n - 1; ++r) {
    for (int k = 0; k <= n; ++k) s(r, r + k) = coeffs[static_cast<std::size_t>(k)];
  }
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) s(n - 1 + r, r + k) = dp[static_cast<std::size_t>(k)];
  }
  const cd res = s.fullPivLu().determinant();
  const double sign = ((n * (n - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
  return sign * res / coeffs.front();
}

void sort_canonical(Roots& roots) {
  double scale = 0.0;
  for (const cd& r : roots) scale = std::max(scale, std::abs(r));
  const double tie = 1e-10 * std::max(scale, std::numeric_limits<double>::min());
  const auto before = [tie](const cd& a, const cd& b) {
    if (std::abs(a.real() - b.real()) > tie) return a.real() > b.real();
    return a.imag() > b.imag();
  };
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < 2; ++i) {
      if (before(roots[static_cast<std::size_t>(i + 1)], roots[static_cast<std::size_t>(i)])) {
        std::swap(roots[static_cast<std::size_t>(i)], roots[static_cast<std::size_t>(i + 1)]);
      }
    }
  }
}

Roots cubic_roots(const Invariants& inv) {
  const cd p = inv.beta2;
  const cd q = inv.beta3;
  Roots roots{cd(0.0), cd(0.0), cd(0.0)};
  if (p == cd(0.0) && q == cd(0.0)) return roots;

  // Cardano: lambda = u - p / (3u), u^3 = -q/2 +- sqrt(q^2/4 + p^3/27); the
  // sign is chosen for the larger |u^3| to avoid cancellation.
  const cd disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  cd u3 = -q / 2.0 + disc;
  const cd alt = -q / 2.0 - disc;
  if (std::abs(alt) > std::abs(u3)) u3 = alt;
  const cd u = std::pow(u3, 1.0 / 3.0);
  const cd omega = std::polar(1.0, 2.0 * M_PI / 3.0);
  cd uk = u;
  for (auto& root : roots) {
    root = (uk == cd(0.0)) ? cd(0.0) : uk - p / (3.0 * uk);
    uk *= omega;
  }

  // Newton polish; a step is kept only if it lowers the residual.
  const auto f = [&](cd x) { return x * x * x + p * x + q; };
  for (auto& root : roots) {
    for (int it = 0; it < 3; ++it) {
      const cd fx = f(root);
      const cd dfx = 3.0 * root * root + p;
      if (std::abs(dfx) == 0.0) break;
      const cd next = root - fx / dfx;
      if (std::abs(f(next)) < std::abs(fx)) {
        root = next;
      } else {
        break;
      }
    }
  }
  sort_canonical(roots);
  return roots;
}

Regime classify(const Invariants& inv, double scale, double eps) {
  if (scale < eps) return Regime::ZeroMatrix;
  const double s2 = scale * scale;
  const double s3 = s2 * scale;
  if (std::abs(inv.beta2) < eps * s2 && std::abs(inv.beta3) < eps * s3) return Regime::EP3;
  if (std::abs(discriminant(inv)) < eps * s3 * s3) return Regime::EP2;
  return Regime::Distinct;
}

Regime classify(const Mat3& m1, double eps) { return classify(invariants(m1), norm(m1), eps); }

namespace {

Mat3 adjugate(const Mat3& a) {
  Mat3 adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3;
      const int r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3;
      const int c1 = (i + 2) % 3;
      adj(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  }
  return adj;
}

// Null vector of (m1 - lambda) as the largest adjugate column, unit norm.
Vec3 eigenvector(const Mat3& m1, cd lambda) {
  const Mat3 adj = adjugate(m1 - lambda * Mat3::Identity());
  int best = 0;
  double best_norm = -1.0;
  for (int c = 0; c < 3; ++c) {
    const double n = adj.col(c).norm();
    if (n > best_norm) {
      best_norm = n;
      best = c;
    }
  }
  return adj.col(best) / best_norm;
}

}  // namespace

Mat3 normal_ordered_product(const GellMannCoefficients& params) {
  Mat3 t = Mat3::Identity();
  for (const Generator g : kNormalOrder) t = t * exp_generator(g, params[g]);
  return t;
}

SpectralFrame local_frame(const Mat3& m1, double z0, double eps) {
  const Roots canonical = cubic_roots(invariants(m1));
  try {
    return local_frame(m1, z0, canonical, eps);
  } catch (const FrameSingularError&) {
    if (classify(m1, eps) != Regime::Distinct) throw;
  }
  constexpr std::array<std::array<std::size_t, 3>, 5> kOtherOrders = {
      {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (const auto& p : kOtherOrders) {
    try {
      return local_frame(m1, z0, Roots{canonical[p[0]], canonical[p[1]], canonical[p[2]]}, eps);
    } catch (const FrameSingularError&) {
    }
  }
  throw FrameSingularError("local_frame: no eigenvalue order admits the normal-ordered gauge", z0);
}

SpectralFrame local_frame(const Mat3& m1, double z0, const Roots& ordered_lambdas,
                          double eps) {
  const Regime regime = classify(m1, eps);
  if (regime != Regime::Distinct) {
    throw FrameSingularError("local_frame: frame undefined in regime " + to_string(regime), z0);
  }
  Mat3 v;
  for (int j = 0; j < 3; ++j) v.col(j) = eigenvector(m1, ordered_lambdas[static_cast<std::size_t>(j)]);

  // V = R D L with R unit upper, L unit lower: Doolittle LDU of the
  // index-reversed matrix, elimination from the bottom-right corner.
  Mat3 w;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) w(i, j) = v(2 - i, 2 - j);
  }
  Mat3 lo = Mat3::Identity();
  Mat3 up = Mat3::Identity();
  cd pivots[3];
  constexpr double kPivotTol = 1e-12;
  for (int k = 0; k < 3; ++k) {
    pivots[k] = w(k, k);
    if (std::abs(pivots[k]) < kPivotTol) {
      throw FrameSingularError("local_frame: vanishing principal minor in the normal-ordered gauge",
                               z0);
    }
    for (int i = k + 1; i < 3; ++i) lo(i, k) = w(i, k) / pivots[k];
    for (int j = k + 1; j < 3; ++j) up(k, j) = w(k, j) / pivots[k];
    for (int i = k + 1; i < 3; ++i) {
      for (int j = k + 1; j < 3; ++j) w(i, j) -= lo(i, k) * pivots[k] * up(k, j);
    }
  }
  // Back to the original index order.
  Mat3 r = Mat3::Identity();
  Mat3 l = Mat3::Identity();
  cd d[3];
  for (int i = 0; i < 3; ++i) {
    d[i] = pivots[2 - i];
    for (int j = 0; j < 3; ++j) {
      r(i, j) = lo(2 - i, 2 - j);
      l(i, j) = up(2 - i, 2 - j);
    }
  }
  // T = V D^-1 = R (D L D^-1); the second factor is again unit lower.
  Mat3 lt = Mat3::Identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) lt(i, j) = d[i] * l(i, j) / d[j];
  }

  SpectralFrame frame;
  frame.z0 = z0;
  frame.lambdas = ordered_lambdas;
  frame.lambda_I0 = ordered_lambdas[0] - ordered_lambdas[1];
  frame.lambda_Y = 1.5 * (ordered_lambdas[0] + ordered_lambdas[1]);

  GellMannCoefficients& a = frame.alphas;
  a.mu_Ip = -kI * r(0, 1);
  a.mu_Up = -kI * r(1, 2);
  a.mu_Vp = -kI * (r(0, 2) - r(0, 1) * r(1, 2));
  a.mu_Im = -kI * lt(1, 0);
  a.mu_Um = -kI * lt(2, 1);
  a.mu_Vm = -kI * (lt(2, 0) - lt(2, 1) * lt(1, 0));

  frame.T = r * lt;
  // Inverse from the unit triangular factors, exact up to rounding.
  Mat3 r_inv = Mat3::Identity();
  r_inv(0, 1) = -r(0, 1);
  r_inv(1, 2) = -r(1, 2);
  r_inv(0, 2) = r(0, 1) * r(1, 2) - r(0, 2);
  Mat3 lt_inv = Mat3::Identity();
  lt_inv(1, 0) = -lt(1, 0);
  lt_inv(2, 1) = -lt(2, 1);
  lt_inv(2, 0) = lt(2, 1) * lt(1, 0) - lt(2, 0);
  frame.T_inv = lt_inv * r_inv;
  return frame;
}

Vec3 project_biorthogonal(const SpectralFrame& frame, const Vec3& e) { return frame.T_inv * e; }

namespace {

constexpr std::array<std::array<int, 3>, 6> kPermutations = {
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

double assignment_cost(const Roots& prev, const Roots& next, const std::array<int, 3>& perm) {
  double c = 0.0;
  for (std::size_t b = 0; b < 3; ++b) c += std::abs(prev[b] - next[static_cast<std::size_t>(perm[b])]);
  return c;
}

struct Match {
  Roots assigned;
  bool ambiguous = false;
};

Match match_with_ambiguity(const Roots& prev, const Roots& next, double tol) {
  double best = std::numeric_limits<double>::infinity();
  double second = best;
  std::size_t best_k = 0;
  std::size_t second_k = 0;
  for (std::size_t k = 0; k < kPermutations.size(); ++k) {
    const double c = assignment_cost(prev, next, kPermutations[k]);
    if (c < best) {
      second = best;
      second_k = best_k;
      best = c;
      best_k = k;
    } else if (c < second) {
      second = c;
      second_k = k;
    }
  }
  Match m;
  double scale = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    m.assigned[b] = next[static_cast<std::size_t>(kPermutations[best_k][b])];
    scale = std::max({scale, std::abs(prev[b]), std::abs(next[b])});
  }
  // Ambiguous only when the competing assignment gives materially different
  // branch values at nearly the same cost.
  double spread = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    spread = std::max(spread, std::abs(next[static_cast<std::size_t>(kPermutations[best_k][b])] -
                                       next[static_cast<std::size_t>(kPermutations[second_k][b])]));
  }
  m.ambiguous = (second - best) <= tol * scale && spread > 1e-6 * scale;
  return m;
}

struct Sample {
  double z;
  Roots roots;  // canonical
  Invariants inv;
  double scale;
  cd delta;
};

Sample sample_at(const CouplerFamily& family, double z) {
  const Mat3 m1 = family.traceless(z);
  if (!all_finite(m1)) throw NumericalError("track_branches: non-finite matrix", z);
  Sample s;
  s.z = z;
  s.inv = invariants(m1);
  s.roots = cubic_roots(s.inv);
  s.scale = norm(m1);
  s.delta = discriminant(s.inv);
  return s;
}

double min_separation(const Roots& r) {
  return std::min({std::abs(r[0] - r[1]), std::abs(r[0] - r[2]), std::abs(r[1] - r[2])});
}

double max_step(const Roots& a, const Roots& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < 3; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool nearly_real(cd delta, double scale) {
  const double s6 = std::pow(scale, 6);
  return std::abs(delta.imag()) <= 1e-9 * std::max(s6, std::abs(delta.real()));
}

BranchEventKind event_kind(const Sample& s, double eps) {
  switch (classify(s.inv, s.scale, eps)) {
    case Regime::ZeroMatrix:
      return BranchEventKind::ZeroMatrix;
    case Regime::EP3:
      return BranchEventKind::EP3;
    default:
      return BranchEventKind::EP2;
  }
}

double bisect_sign_change(const CouplerFamily& family, double a, double b, double fa) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = sample_at(family, m).delta.real();
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Golden-section minimum of |Delta| / scale^6 on [a, b].
double minimize_delta(const CouplerFamily& family, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  const auto f = [&](double z) {
    const Sample s = sample_at(family, z);
    return std::abs(s.delta) / std::max(std::pow(s.scale, 6), std::numeric_limits<double>::min());
  };
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 120 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Roots match_branches(const Roots& prev, const Roots& next) {
  return match_with_ambiguity(prev, next, 0.0).assigned;
}

BranchTrack track_branches(const CouplerFamily& family, std::span<const double> z_grid,
                           const BranchTrackOptions& opts) {
  BranchTrack out;
  if (z_grid.empty()) return out;
  for (std::size_t k = 1; k < z_grid.size(); ++k) {
    if (!(z_grid[k] > z_grid[k - 1])) throw ConfigError("track_branches: grid must increase");
  }

  // Pass 1: refined samples and continuous paths.
  std::vector<Sample> samples;
  samples.push_back(sample_at(family, z_grid[0]));
  out.z.push_back(z_grid[0]);
  out.paths.push_back(samples.back().roots);

  const auto push = [&](const Sample& s) {
    const Match m = match_with_ambiguity(out.paths.back(), s.roots, opts.ambiguity_tol);
    if (m.ambiguous) out.events.push_back({s.z, BranchEventKind::Ambiguous, s.delta});
    samples.push_back(s);
    out.z.push_back(s.z);
    out.paths.push_back(m.assigned);
  };

  // Recursive bisection of a grid interval while the eigenvalue step exceeds
  // half the branch separation.
  const auto refine = [&](auto&& self, const Sample& b, int depth) -> void {
    const Sample& a = samples.back();
    const Roots matched = match_branches(out.paths.back(), b.roots);
    const double sep = min_separation(out.paths.back());
    if (depth < opts.max_refine_depth && max_step(out.paths.back(), matched) > 0.5 * sep) {
      const Sample mid = sample_at(family, 0.5 * (a.z + b.z));
      self(self, mid, depth + 1);
      self(self, b, depth + 1);
      return;
    }
    push(b);
  };

  for (std::size_t k = 1; k < z_grid.size(); ++k) {
    const Sample b = sample_at(family, z_grid[k]);
    refine(refine, b, 0);
  }

  // Pass 2: EP events from the refined discriminant samples.
  std::vector<BranchEvent> ep_events;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Sample& s = samples[k];
    if (s.delta == cd(0.0)) {
      const bool prev_zero = k > 0 && samples[k - 1].delta == cd(0.0);
      if (!prev_zero) ep_events.push_back({s.z, event_kind(s, opts.eps), s.delta});
      continue;
    }
    if (k == 0) continue;
    const Sample& a = samples[k - 1];
    if (a.delta == cd(0.0)) continue;
    const bool real_pair = nearly_real(a.delta, a.scale) && nearly_real(s.delta, s.scale);
    if (real_pair && ((a.delta.real() < 0.0) != (s.delta.real() < 0.0))) {
      const double z = bisect_sign_change(family, a.z, s.z, a.delta.real());
      const Sample at = sample_at(family, z);
      ep_events.push_back({z, event_kind(at, opts.eps), at.delta});
      continue;
    }
    // Interior local minimum of |Delta| without a sign change.
    if (k + 1 < samples.size()) {
      const Sample& c = samples[k + 1];
      const double fa = std::abs(a.delta) / std::pow(a.scale, 6);
      const double fs = std::abs(s.delta) / std::pow(s.scale, 6);
      const double fc = std::abs(c.delta) / std::pow(c.scale, 6);
      const bool sign_change_next = nearly_real(s.delta, s.scale) &&
                                    nearly_real(c.delta, c.scale) &&
                                    ((s.delta.real() < 0.0) != (c.delta.real() < 0.0));
      if (fs <= fa && fs <= fc && !sign_change_next) {
        const double z = minimize_delta(family, a.z, c.z);
        const Sample at = sample_at(family, z);
        const Regime r = classify(at.inv, at.scale, opts.eps);
        if (r != Regime::Distinct) ep_events.push_back({z, event_kind(at, opts.eps), at.delta});
      }
    }
  }
  out.events.insert(out.events.end(), ep_events.begin(), ep_events.end());
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const BranchEvent& x, const BranchEvent& y) { return x.z < y.z; });
  return out;
}

}  // namespace sl3
