#include "sl3/families.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace sl3 {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

CouplerFamily pt_cyclic(Profile gamma, Profile kappa1, Profile kappa2) {
  auto gen = [gamma, kappa1, kappa2](double z) {
    const double g = gamma(z);
    const double k1 = kappa1(z);
    const double k2 = kappa2(z);
    Mat3 m;
    m << cd(0, g), k1, k2,
         k1, 0.0, k1,
         k2, k1, cd(0, -g);
    return m;
  };
  return CouplerFamily(FamilyKind::PTCyclic,
                       {{"gamma", gamma}, {"kappa1", kappa1}, {"kappa2", kappa2}}, gen);
}

CouplerFamily chiral_1(Profile gamma, Profile kappa1, Profile kappa2) {
  auto gen = [gamma, kappa1, kappa2](double z) {
    const double g = gamma(z);
    const double k1 = kappa1(z);
    const double k2 = kappa2(z);
    Mat3 m;
    m << cd(0, g), k1, cd(0, k2),
         k1, 0.0, k1,
         cd(0, k2), k1, cd(0, -g);
    return m;
  };
  return CouplerFamily(FamilyKind::Chiral1,
                       {{"gamma", gamma}, {"kappa1", kappa1}, {"kappa2", kappa2}}, gen);
}

CouplerFamily chiral_2(Profile gamma, Profile kappa) {
  auto gen = [gamma, kappa](double z) {
    const double g = gamma(z);
    const double k = kappa(z);
    Mat3 m;
    m << cd(0, g), k, -k,
         k, 0.0, cd(0, k),
         -k, cd(0, k), cd(0, -g);
    return m;
  };
  return CouplerFamily(FamilyKind::Chiral2, {{"gamma", gamma}, {"kappa", kappa}}, gen);
}

Invariants pt_cyclic_invariants(double gamma, double kappa1, double kappa2) {
  return {gamma * gamma - 2.0 * kappa1 * kappa1 - kappa2 * kappa2,
          -2.0 * kappa1 * kappa1 * kappa2};
}

CouplerFamily ep3_loop(const LoopSpec& spec, double gamma) {
  if (!(spec.r > 0.0)) throw ConfigError("ep3_loop: radius must be positive");
  if (spec.turns < 1) throw ConfigError("ep3_loop: need at least one turn");
  if (!(gamma > 0.0)) throw ConfigError("ep3_loop: gamma must be positive");
  const double r = spec.r;
  const Profile k1 = Profile::function(
      [r, gamma](double z) { return gamma * (kInvSqrt2 + r * std::cos(2.0 * M_PI * gamma * z)); });
  const Profile k2 =
      Profile::function([r, gamma](double z) { return gamma * r * std::sin(2.0 * M_PI * gamma * z); });
  const CouplerFamily base = pt_cyclic(Profile(gamma), k1, k2);
  return CouplerFamily(FamilyKind::PTCyclic, base.parameters(),
                       [base](double z) { return base.matrix(z); }, 0.0,
                       loop_length(spec, gamma));
}

double loop_length(const LoopSpec& spec, double gamma) { return spec.turns / gamma; }

std::vector<double> sign_change_roots(const std::function<double(double)>& f, double lo,
                                      double hi, int scan_intervals) {
  std::vector<double> roots;
  if (!(hi > lo) || scan_intervals < 1) return roots;
  const double step = (hi - lo) / scan_intervals;
  double a = lo;
  double fa = f(a);
  for (int i = 1; i <= scan_intervals; ++i) {
    const double b = (i == scan_intervals) ? hi : lo + i * step;
    const double fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
      double l = a, r = b, fl = fa;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (l + r);
        if (m <= l || m >= r) break;
        const double fm = f(m);
        if (fm == 0.0) {
          l = r = m;
          break;
        }
        if ((fm < 0.0) == (fl < 0.0)) {
          l = m;
          fl = fm;
        } else {
          r = m;
        }
      }
      double x = 0.5 * (l + r);
      // Secant polish inside the final bracket.
      double x0 = l, x1 = r;
      double f0 = f(x0), f1 = f(x1);
      for (int it = 0; it < 3 && f1 != f0; ++it) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= a && x2 <= b)) break;
        if (std::abs(f(x2)) < std::abs(f(x))) x = x2;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x2);
      }
      roots.push_back(x);
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0 && (roots.empty() || roots.back() != a)) roots.push_back(a);
  return roots;
}

std::vector<double> find_ep2(double kappa1_over_gamma, std::pair<double, double> bracket,
                             int scan_intervals) {
  const double k1 = kappa1_over_gamma;
  const auto delta = [k1](double k2) {
    return discriminant(pt_cyclic_invariants(1.0, k1, k2)).real();
  };
  std::vector<double> out;
  for (const double k2 : sign_change_roots(delta, bracket.first, bracket.second, scan_intervals)) {
    const Invariants inv = pt_cyclic_invariants(1.0, k1, k2);
    const double s = std::sqrt(2.0 + 4.0 * k1 * k1 + 2.0 * k2 * k2);
    if (classify(inv, s) == Regime::EP3) continue;
    out.push_back(k2);
  }
  return out;
}

CouplerFamily map_family(FamilyKind kind, double x, double y, double gamma) {
  switch (kind) {
    case FamilyKind::PTCyclic:
      return pt_cyclic(gamma, gamma * x, gamma * y);
    case FamilyKind::Chiral1:
      return chiral_1(gamma, gamma * x, gamma * y);
    case FamilyKind::Chiral2:
      return chiral_2(x, y);
    case FamilyKind::Custom:
      break;
  }
  throw ConfigError("discriminant_map: custom families have no parameter plane");
}

namespace {

struct PointInfo {
  Invariants inv;
  double scale;
};

PointInfo point_info(FamilyKind kind, double x, double y, double gamma) {
  const Mat3 m1 = map_family(kind, x, y, gamma).traceless(0.0);
  return {invariants(m1), norm(m1)};
}

// Gauss-Newton on (beta2, beta3) = 0 over the plane; returns true on an
// isolated nilpotent, non-zero point.
bool polish_ep3(FamilyKind kind, double gamma, double& x, double& y, double eps) {
  const auto residual = [&](double px, double py) {
    const PointInfo p = point_info(kind, px, py, gamma);
    Eigen::Vector4d r(p.inv.beta2.real(), p.inv.beta2.imag(), p.inv.beta3.real(),
                      p.inv.beta3.imag());
    return r;
  };
  for (int it = 0; it < 60; ++it) {
    const Eigen::Vector4d r = residual(x, y);
    const double h = 1e-7 * std::max(1.0, std::max(std::abs(x), std::abs(y)));
    Eigen::Matrix<double, 4, 2> j;
    j.col(0) = (residual(x + h, y) - residual(x - h, y)) / (2 * h);
    j.col(1) = (residual(x, y + h) - residual(x, y - h)) / (2 * h);
    const Eigen::Vector2d step = j.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) return false;
    x += step[0];
    y += step[1];
    if (step.norm() < 1e-15 * std::max(1.0, std::hypot(x, y))) break;
  }
  const PointInfo p = point_info(kind, x, y, gamma);
  return classify(p.inv, p.scale, eps) == Regime::EP3;
}

}  // namespace

DiscriminantMap discriminant_map(FamilyKind kind, const MapGrid& grid) {
  if (grid.nx < 1 || grid.ny < 1) throw ConfigError("discriminant_map: empty grid");
  const auto coord = [](double lo, double hi, int n, int i) {
    return n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  };
  DiscriminantMap map;
  map.records.resize(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny));
  std::vector<PointInfo> info(map.records.size());
  const auto idx = [&grid](int i, int j) {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(i);
  };

  const auto fill_rows = [&](int j_begin, int j_end) {
    for (int j = j_begin; j < j_end; ++j) {
      const double y = coord(grid.y_min, grid.y_max, grid.ny, j);
      for (int i = 0; i < grid.nx; ++i) {
        const double x = coord(grid.x_min, grid.x_max, grid.nx, i);
        const PointInfo p = point_info(kind, x, y, grid.gamma);
        MapRecord& rec = map.records[idx(i, j)];
        rec.x = x;
        rec.y = y;
        rec.beta2 = p.inv.beta2;
        rec.beta3 = p.inv.beta3;
        rec.discriminant = discriminant(p.inv);
        rec.regime = classify(p.inv, p.scale, grid.eps);
        info[idx(i, j)] = p;
      }
    }
  };
  const int jobs = std::clamp(grid.jobs, 1, grid.ny);
  if (jobs == 1) {
    fill_rows(0, grid.ny);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      const int b = grid.ny * w / jobs;
      const int e = grid.ny * (w + 1) / jobs;
      workers.emplace_back(fill_rows, b, e);
    }
    for (auto& t : workers) t.join();
  }

  const auto add_locus = [&map](double x, double y, Regime r) {
    for (const EPLocus& l : map.loci) {
      if (std::abs(l.x - x) < 1e-6 && std::abs(l.y - y) < 1e-6) return;
    }
    map.loci.push_back({x, y, r});
  };
  const auto real_delta = [&](double x, double y) {
    return discriminant(point_info(kind, x, y, grid.gamma).inv).real();
  };
  const auto is_real = [](const MapRecord& r) {
    return std::abs(r.discriminant.imag()) <= 1e-9 * std::max(1.0, std::abs(r.discriminant.real()));
  };
  const auto locus_regime = [&](double x, double y) {
    const PointInfo p = point_info(kind, x, y, grid.gamma);
    const Regime r = classify(p.inv, p.scale, grid.eps);
    return r == Regime::Distinct ? Regime::EP2 : r;
  };

  // EP2 loci: sign changes of Delta along rows and columns.
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i + 1 < grid.nx; ++i) {
      const MapRecord& a = map.records[idx(i, j)];
      const MapRecord& b = map.records[idx(i + 1, j)];
      if (!is_real(a) || !is_real(b)) continue;
      if ((a.discriminant.real() < 0.0) == (b.discriminant.real() < 0.0)) continue;
      const double y = a.y;
      for (const double x : sign_change_roots([&](double t) { return real_delta(t, y); }, a.x, b.x, 1)) {
        add_locus(x, y, locus_regime(x, y));
      }
    }
  }
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j + 1 < grid.ny; ++j) {
      const MapRecord& a = map.records[idx(i, j)];
      const MapRecord& b = map.records[idx(i, j + 1)];
      if (!is_real(a) || !is_real(b)) continue;
      if ((a.discriminant.real() < 0.0) == (b.discriminant.real() < 0.0)) continue;
      const double x = a.x;
      for (const double y : sign_change_roots([&](double t) { return real_delta(x, t); }, a.y, b.y, 1)) {
        add_locus(x, y, locus_regime(x, y));
      }
    }
  }

  // EP3 loci: local minima of the scaled invariants, polished.
  const auto nilpotency_gauge = [&](std::size_t k) {
    const PointInfo& p = info[k];
    if (p.scale == 0.0) return 0.0;
    return std::abs(p.inv.beta2) / (p.scale * p.scale) +
           std::pow(std::abs(p.inv.beta3), 2.0 / 3.0) / (p.scale * p.scale);
  };
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double g = nilpotency_gauge(idx(i, j));
      if (g > 0.1) continue;
      bool minimum = true;
      for (int dj = -1; dj <= 1 && minimum; ++dj) {
        for (int di = -1; di <= 1 && minimum; ++di) {
          const int ii = i + di;
          const int jj = j + dj;
          if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= grid.nx || jj >= grid.ny) continue;
          if (nilpotency_gauge(idx(ii, jj)) < g) minimum = false;
        }
      }
      if (!minimum) continue;
      double x = map.records[idx(i, j)].x;
      double y = map.records[idx(i, j)].y;
      if (!polish_ep3(kind, grid.gamma, x, y, grid.eps)) continue;
      const double tx = 1e-9 * std::max(1.0, grid.x_max - grid.x_min);
      const double ty = 1e-9 * std::max(1.0, grid.y_max - grid.y_min);
      if (x < grid.x_min - tx || x > grid.x_max + tx || y < grid.y_min - ty || y > grid.y_max + ty) {
        continue;
      }
      map.loci.erase(std::remove_if(map.loci.begin(), map.loci.end(),
                                    [&](const EPLocus& l) {
                                      return std::abs(l.x - x) < 1e-4 && std::abs(l.y - y) < 1e-4;
                                    }),
                     map.loci.end());
      map.loci.push_back({x, y, Regime::EP3});
    }
  }
  return map;
}

}  // namespace sl3
