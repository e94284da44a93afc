#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sl3/algebra.hpp"
#include "sl3/family.hpp"
#include "sl3/types.hpp"

namespace sl3 {

inline constexpr double kDefaultEpsEP = 1e-9;

/// Coefficients of the depressed characteristic cubic
/// lambda^3 + beta2 lambda + beta3 = 0.
struct Invariants {
  cd beta2{};
  cd beta3{};
};

enum class Regime { Distinct, EP2, EP3, ZeroMatrix };

std::string to_string(Regime r);

using Roots = std::array<cd, 3>;

/// beta_j = -(1/j) Tr[M1^j]. Throws NotTracelessError.
Invariants invariants(const Mat3& m1);

/// Same invariants through the Newton-identity recursion
/// beta_k = -(1/k) sum_{j=1..k} beta_{k-j} Tr[M1^j], valid for any N.
/// Returns beta_0 .. beta_N.
std::vector<cd> characteristic_coefficients(const MatX& m);

/// -4 beta2^3 - 27 beta3^2.
cd discriminant(const Invariants& inv);

/// Discriminant through the Sylvester resultant:
/// (-1)^{N(N-1)/2} Res(p, p') / a_N. Coefficients are given highest degree
/// first. Throws ConfigError on a zero leading coefficient.
cd discriminant_resultant(std::span<const cd> coeffs);

/// Roots of the depressed cubic in canonical order: descending real part,
/// ties by descending imaginary part.
Roots cubic_roots(const Invariants& inv);

/// Canonical ordering used across the library.
void sort_canonical(Roots& roots);

Regime classify(const Invariants& inv, double scale, double eps = kDefaultEpsEP);
Regime classify(const Mat3& m1, double eps = kDefaultEpsEP);

/// Biorthogonal local frame at one z.
///
/// T is normal ordered: T = exp(i a_Ip I+) exp(i a_Up U+) exp(i a_Vp V+)
/// exp(i a_Vm V-) exp(i a_Um U-) exp(i a_Im I-), the Cartan factors fixed to
/// one. Columns of T are right eigenvectors, rows of T_inv left ones.
struct SpectralFrame {
  double z0 = 0.0;
  Roots lambdas{};
  cd lambda_I0{};
  cd lambda_Y{};
  Mat3 T = Mat3::Identity();
  Mat3 T_inv = Mat3::Identity();
  /// Ladder gauge parameters; the Cartan entries are zero.
  GellMannCoefficients alphas{};

  Vec3 right(int j) const { return T.col(j); }
  Eigen::RowVector3cd left(int j) const { return T_inv.row(j); }
};

/// Frame with eigenvalues in canonical order, or in the first reordering
/// of it that admits the triangular gauge (e.g. diagonal input).
SpectralFrame local_frame(const Mat3& m1, double z0, double eps = kDefaultEpsEP);
/// Frame with caller-supplied eigenvalue order (e.g. tracked branches).
SpectralFrame local_frame(const Mat3& m1, double z0, const Roots& ordered_lambdas,
                          double eps = kDefaultEpsEP);

/// Product of the eight normal-ordered factors for the given parameters.
Mat3 normal_ordered_product(const GellMannCoefficients& params);

/// c_j = l_j E.
Vec3 project_biorthogonal(const SpectralFrame& frame, const Vec3& e);

enum class BranchEventKind { EP2, EP3, ZeroMatrix, Ambiguous };

std::string to_string(BranchEventKind k);

struct BranchEvent {
  double z = 0.0;
  BranchEventKind kind = BranchEventKind::EP2;
  cd discriminant{};
};

struct BranchTrack {
  std::vector<double> z;
  /// Continuous eigenvalue paths; paths[k][b] is branch b at z[k].
  std::vector<Roots> paths;
  std::vector<BranchEvent> events;
};

struct BranchTrackOptions {
  double eps = kDefaultEpsEP;
  /// Relative gap between the best and the second best assignment below which
  /// the match is flagged as ambiguous.
  double ambiguity_tol = 1e-9;
  int max_refine_depth = 12;
};

/// Follows the three eigenvalues of family.traceless(z) along z_grid by
/// minimal-total-distance matching, refining the grid where steps are large
/// against the branch separation. Emits EP events at sign changes of the
/// discriminant and at near-zero dips, refined by bisection.
BranchTrack track_branches(const CouplerFamily& family, std::span<const double> z_grid,
                           const BranchTrackOptions& opts = {});

/// Permutation of `next` closest to `prev` in summed distance.
Roots match_branches(const Roots& prev, const Roots& next);

}  // namespace sl3
