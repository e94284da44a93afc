#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sl3/family.hpp"
#include "sl3/spectral.hpp"

namespace sl3 {

/// [[i g, k1, k2], [k1, 0, k1], [k2, k1, -i g]]: the PT-symmetric trimer for
/// k2 = 0 and the cyclic trimer for k1 = k2.
CouplerFamily pt_cyclic(Profile gamma, Profile kappa1, Profile kappa2);

/// [[i g, k1, i k2], [k1, 0, k1], [i k2, k1, -i g]].
CouplerFamily chiral_1(Profile gamma, Profile kappa1, Profile kappa2);

/// [[i g, k, -k], [k, 0, i k], [-k, i k, -i g]].
CouplerFamily chiral_2(Profile gamma, Profile kappa);

/// Closed-form invariants of the pt_cyclic matrix.
Invariants pt_cyclic_invariants(double gamma, double kappa1, double kappa2);

/// Circular loop around the EP3 at (k1/g, k2/g) = (1/sqrt 2, 0):
/// k1/g = 1/sqrt 2 + r cos(2 pi g z), k2/g = r sin(2 pi g z), g z in [0, turns].
struct LoopSpec {
  double r = 0.4253;
  int turns = 1;
};

CouplerFamily ep3_loop(const LoopSpec& spec, double gamma);

/// Propagation length covering all turns of the loop.
double loop_length(const LoopSpec& spec, double gamma);

/// kappa2/gamma roots of the pt_cyclic discriminant at fixed kappa1/gamma
/// (gamma = 1) inside `bracket`: sign-change scan, bisection, secant polish.
/// Points with beta2 = beta3 = 0 are EP3, not EP2, and are excluded.
std::vector<double> find_ep2(double kappa1_over_gamma, std::pair<double, double> bracket,
                             int scan_intervals = 2000);

/// Generic real-root finder for a scalar function on an interval, used by
/// find_ep2 and the discriminant map.
std::vector<double> sign_change_roots(const std::function<double(double)>& f, double lo,
                                      double hi, int scan_intervals);

/// One point of the parameter plane. For pt_cyclic and chiral_1 the axes are
/// (k1/g, k2/g) at g = gamma; for chiral_2 they are (g, k).
struct MapRecord {
  double x = 0.0;
  double y = 0.0;
  cd discriminant{};
  cd beta2{};
  cd beta3{};
  Regime regime = Regime::Distinct;
};

struct EPLocus {
  double x = 0.0;
  double y = 0.0;
  Regime regime = Regime::EP2;
};

struct DiscriminantMap {
  std::vector<MapRecord> records;
  /// Polished EP2 points (row-wise sign changes) and EP3 points.
  std::vector<EPLocus> loci;
};

struct MapGrid {
  double x_min = 0.0, x_max = 4.0;
  double y_min = 0.0, y_max = 4.0;
  int nx = 400, ny = 400;
  double gamma = 1.0;  // fixed gamma for the (k1, k2) plane
  double eps = kDefaultEpsEP;
  int jobs = 1;
};

/// Family at one point of a map plane.
CouplerFamily map_family(FamilyKind kind, double x, double y, double gamma);

DiscriminantMap discriminant_map(FamilyKind kind, const MapGrid& grid);

}  // namespace sl3
