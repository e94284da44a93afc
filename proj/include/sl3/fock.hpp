#pragma once

#include <array>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "sl3/family.hpp"
#include "sl3/propagator.hpp"
#include "sl3/spectral.hpp"
#include "sl3/types.hpp"

namespace sl3 {

/// Occupation triple |n1, n2, n3>.
struct Occupation {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;

  int total() const { return n1 + n2 + n3; }
  int operator[](int mode) const { return mode == 0 ? n1 : (mode == 1 ? n2 : n3); }
  friend bool operator==(const Occupation&, const Occupation&) = default;
};

/// Fixed-excitation basis of the symmetric irrep (n, 0), ordered
/// lexicographically descending in (n1, n2).
class FockBasis {
public:
  explicit FockBasis(int n);

  int n() const { return n_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<Occupation>& states() const { return states_; }
  const Occupation& operator[](std::size_t i) const { return states_[i]; }
  /// Index of an occupation triple; throws ConfigError if it is not in the basis.
  std::size_t index_of(const Occupation& s) const;
  bool contains(const Occupation& s) const;

private:
  int n_;
  std::vector<Occupation> states_;
};

std::shared_ptr<const FockBasis> basis(int n);

/// (n + 1)(n + 2) / 2.
std::size_t irrep_dimension(int n);

/// Cartan and Dynkin labels of one occupation state. Stored as integers:
/// I0 = twice_I0 / 2, Y = thrice_Y / 3.
struct WeightPoint {
  int twice_I0 = 0;
  int thrice_Y = 0;
  int dynkin_p = 0;
  int dynkin_q = 0;

  double I0() const { return 0.5 * twice_I0; }
  double Y() const { return thrice_Y / 3.0; }
  friend bool operator==(const WeightPoint&, const WeightPoint&) = default;
};

WeightPoint weight_coordinates(const Occupation& state, int n);

/// State amplitudes over a fixed-n basis. The norm is not conserved under
/// non-Hermitian propagation.
struct FockVector {
  std::shared_ptr<const FockBasis> space;
  VecX amplitudes;

  static FockVector zero(std::shared_ptr<const FockBasis> b);
  static FockVector basis_state(std::shared_ptr<const FockBasis> b, const Occupation& s);
  /// (|a> + |b>) / sqrt(2).
  static FockVector noon(std::shared_ptr<const FockBasis> b, const Occupation& a,
                         const Occupation& c);
  cd operator[](const Occupation& s) const { return amplitudes[static_cast<Eigen::Index>(space->index_of(s))]; }
};

/// Number-conserving operator on a fixed-n subspace.
class FockOperator {
public:
  using Sparse = Eigen::SparseMatrix<cd>;

  explicit FockOperator(MatX dense);
  explicit FockOperator(Sparse sparse);

  Eigen::Index dim() const;
  bool is_sparse() const { return std::holds_alternative<Sparse>(op_); }
  VecX apply(const VecX& v) const;
  MatX to_dense() const;

private:
  std::variant<MatX, Sparse> op_;
};

struct FockOptions {
  /// Operators for n up to this value are stored dense.
  int dense_max_n = 8;
};

/// sum_{jk} M_jk a_j^dag a_k restricted to basis(n).
FockOperator promote(const Mat3& m, const FockBasis& b, const FockOptions& opts = {});
MatX promote_dense(const Mat3& m, const FockBasis& b);

/// Representation of a group element g on the symmetric subspace:
/// a_k^dag -> sum_j g_jk a_j^dag.
MatX promote_group(const Mat3& g, const FockBasis& b);

/// Diagonal number operator of one mode (0-based).
MatX number_operator(int mode, const FockBasis& b);

enum class Evolution { Ket, Bra };

struct FockSamples {
  std::vector<double> z;
  std::vector<FockVector> states;
};

/// Integrates d psi / dz = i promote(M1(z)) psi (Ket) or the dual equation
/// for a bra, d l / dz = -i promote(M1(z))^T l, whose pairing with a
/// propagated ket is conserved.
FockSamples propagate_fock(const CouplerFamily& family, const FockVector& psi0,
                           std::span<const double> z_samples, const PropagatorOptions& opts = {},
                           Evolution evolution = Evolution::Ket);

struct AmplitudeTable {
  std::vector<Occupation> states;
  std::vector<double> P;
  std::vector<double> P_tilde;
};

/// P = |<n1 n2 n3|psi>|^2 and P / sum P. Throws ConfigError for the zero state.
AmplitudeTable amplitudes(const FockVector& psi);

/// Similarity frame promoted to the n-excitation subspace.
struct PromotedFrame {
  std::shared_ptr<const FockBasis> space;
  MatX T;
  MatX T_inv;
  /// Eigenvalue of each basis label: sum_j m_j lambda_j.
  std::vector<cd> eigenvalues;

  FockVector right(const Occupation& s) const;
  /// Bra components <s| T^-1 stored as a vector.
  FockVector left(const Occupation& s) const;
};

PromotedFrame promote_frame(const SpectralFrame& frame, std::shared_ptr<const FockBasis> b);

struct Populations {
  std::array<cd, 3> n{};
  std::array<cd, 3> n_tilde{};
  std::array<double, 3> modulus{};
  /// <l|r>; sum_j n_j = n <l|r>.
  cd overlap{};
};

/// n_j = <l| n_j |r> and n_j / sum_j |n_j|. Throws ConfigError when all n_j vanish.
Populations biorthogonal_populations(const FockVector& right, const FockVector& left);
/// Populations of the promoted eigenpair labelled by `s`.
Populations biorthogonal_populations(const PromotedFrame& frame, const Occupation& s);

/// U^-1 X U for a promoted group element and operator, the Heisenberg
/// evolved observable.
MatX heisenberg(const MatX& u_hat, const MatX& x_hat);

/// Smallest k with A^k = 0 (singular values below tol * |A|^k), or 0 when
/// A is not nilpotent within dim + 1 powers.
int nilpotency_index(const MatX& a, double tol = 1e-8);

/// Size of the largest Jordan block of A at eigenvalue lambda, from ranks
/// of powers of (A - lambda).
int largest_jordan_block(const MatX& a, cd lambda, double tol = 1e-8);

/// Number of singular values above `threshold`.
int numerical_rank(const MatX& a, double threshold);

}  // namespace sl3
