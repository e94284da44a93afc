#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sl3/algebra.hpp"
#include "sl3/family.hpp"
#include "sl3/types.hpp"

namespace sl3 {

/// Parameters of the normal-ordered factorization
/// U = e^{i v_Ip I+} e^{i v_Up U+} e^{i v_Vp V+} e^{i v_I0 I0} e^{i v_Y Y}
///     e^{i v_Vm V-} e^{i v_Um U-} e^{i v_Im I-}.
struct WeiNormanCoords {
  cd v_Ip{};
  cd v_Up{};
  cd v_Vp{};
  cd v_I0{};
  cd v_Y{};
  cd v_Vm{};
  cd v_Um{};
  cd v_Im{};

  cd& operator[](Generator g);
  cd operator[](Generator g) const;

  VecX to_vector() const;
  static WeiNormanCoords from_vector(const VecX& v);
};

/// Right-hand side of the triangular Wei-Norman hierarchy: the Riccati pair
/// (v_Ip, v_Vp), the scalar Riccati equation for v_Up, and the linear
/// equations for the Cartan and lowering parameters. `mu` is the traceless
/// coupling matrix.
WeiNormanCoords wei_norman_rhs(const WeiNormanCoords& v, const Mat3& mu);

/// Ordered product of the eight factors.
Mat3 reconstruct_U(const WeiNormanCoords& v);

/// A chart restart: `variable` left the trusted coordinate region at z.
struct BlowupEvent {
  double z = 0.0;
  Generator variable = Generator::Ip;
};

struct PropagationResult {
  std::vector<double> z_samples;
  /// Chart-local coordinates: U(z) = reconstruct_U(coords[k]) * chart_base[chart[k]].
  std::vector<WeiNormanCoords> coords;
  std::vector<std::size_t> chart;
  std::vector<Mat3> chart_base;
  std::vector<Mat3> U;
  std::vector<BlowupEvent> blowup_events;
};

struct PropagatorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Wei-Norman chart bound: the chart is restarted once any ladder
  /// coordinate or any Cartan factor entry (or its inverse) exceeds this
  /// magnitude.
  double chart_bound = 8.0;
};

/// Adaptive integration of the Wei-Norman system with chart restarts; U is
/// reconstructed at each sample. Samples must be non-decreasing and >= 0.
PropagationResult integrate_wei_norman(const CouplerFamily& family,
                                       std::span<const double> z_samples,
                                       const PropagatorOptions& opts = {});
PropagationResult integrate_wei_norman(const CouplerFamily& family, double z_end, double tol,
                                       std::size_t n_samples = 101);

struct DirectResult {
  std::vector<double> z_samples;
  std::vector<Mat3> U;
};

/// Oracle: adaptive integration of dU/dz = i M1(z) U, U(0) = 1 over the
/// nine matrix components.
DirectResult integrate_direct(const CouplerFamily& family, std::span<const double> z_samples,
                              const PropagatorOptions& opts = {});
DirectResult integrate_direct(const CouplerFamily& family, double z_end, double tol,
                              std::size_t n_samples = 101);

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
Mat3 expm(const Mat3& a);

/// exp(i z M1).
Mat3 exp_constant(const Mat3& m1, double z);

struct HolonomyOptions {
  int steps = 2048;
  double eps = 1e-9;
};

struct HolonomyResult {
  Mat3 H = Mat3::Identity();
  int steps = 0;
  /// |H(steps) - H(steps/2)| and |H(steps/2) - H(steps/4)| in max norm.
  double delta_fine = 0.0;
  double delta_coarse = 0.0;
  /// delta_coarse / delta_fine; about 4 for the midpoint scheme.
  double convergence_ratio = 0.0;
  /// Cartan phases from the principal logarithms of H's diagonal:
  /// diag(H) ~ exp(i theta_I0 I0 + i theta_Y Y). Defined modulo the 2 pi
  /// ambiguity of the principal branch.
  cd theta_I0{};
  cd theta_Y{};
  /// True when the eigenvalue labels at the end of the loop are those at the start.
  bool branches_closed = true;
};

/// Path-ordered product of exp(i T^-1 dT/dz dz) around the closed loop
/// [0, loop_length], midpoint rule with central-difference frame derivatives
/// and branch-tracked eigenvalue order. Throws FrameSingularError if the loop
/// meets an exceptional point or a singular gauge, ConfigError if the loop
/// is not closed.
HolonomyResult holonomy(const CouplerFamily& family, double loop_length,
                        const HolonomyOptions& opts = {});

/// Path-ordered product at a single resolution.
Mat3 holonomy_product(const CouplerFamily& family, double loop_length, int steps,
                      double eps = 1e-9, bool* branches_closed = nullptr);

/// Uniform grid of n points on [0, z_end].
std::vector<double> uniform_grid(double z_end, std::size_t n);

}  // namespace sl3
