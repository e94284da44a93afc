#include "sl3/fock.hpp"

#include <cmath>
#include <map>

#include "sl3/ode.hpp"

namespace sl3 {

FockBasis::FockBasis(int n) : n_(n) {
  if (n < 0) throw ConfigError("Fock basis needs n >= 0");
  states_.reserve(irrep_dimension(n));
  for (int n1 = n; n1 >= 0; --n1) {
    for (int n2 = n - n1; n2 >= 0; --n2) states_.push_back({n1, n2, n - n1 - n2});
  }
}

bool FockBasis::contains(const Occupation& s) const {
  return s.n1 >= 0 && s.n2 >= 0 && s.n3 >= 0 && s.total() == n_;
}

std::size_t FockBasis::index_of(const Occupation& s) const {
  if (!contains(s)) {
    throw ConfigError("occupation (" + std::to_string(s.n1) + "," + std::to_string(s.n2) + "," +
                      std::to_string(s.n3) + ") is not in the n=" + std::to_string(n_) + " basis");
  }
  // States with larger n1 come first; each n1' > n1 contributes n - n1' + 1.
  const int k = n_ - s.n1;  // number of blocks before this n1
  const std::size_t before = static_cast<std::size_t>(k) * static_cast<std::size_t>(k + 1) / 2;
  return before + static_cast<std::size_t>(n_ - s.n1 - s.n2);
}

std::shared_ptr<const FockBasis> basis(int n) { return std::make_shared<const FockBasis>(n); }

std::size_t irrep_dimension(int n) {
  return static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 2) / 2;
}

WeightPoint weight_coordinates(const Occupation& s, int n) {
  if (s.total() != n) throw ConfigError("weight_coordinates: occupations must sum to n");
  WeightPoint w;
  w.twice_I0 = n - 2 * s.n2 - s.n3;
  w.thrice_Y = n - 3 * s.n3;
  w.dynkin_p = s.n1 - s.n2;
  w.dynkin_q = s.n2 - s.n3;
  return w;
}

FockVector FockVector::zero(std::shared_ptr<const FockBasis> b) {
  const auto dim = static_cast<Eigen::Index>(b->size());
  return {std::move(b), VecX::Zero(dim)};
}

FockVector FockVector::basis_state(std::shared_ptr<const FockBasis> b, const Occupation& s) {
  FockVector v = zero(std::move(b));
  v.amplitudes[static_cast<Eigen::Index>(v.space->index_of(s))] = 1.0;
  return v;
}

FockVector FockVector::noon(std::shared_ptr<const FockBasis> b, const Occupation& a,
                            const Occupation& c) {
  if (a == c) throw ConfigError("NOON state needs two distinct occupations");
  FockVector v = zero(std::move(b));
  const double h = 1.0 / std::sqrt(2.0);
  v.amplitudes[static_cast<Eigen::Index>(v.space->index_of(a))] = h;
  v.amplitudes[static_cast<Eigen::Index>(v.space->index_of(c))] = h;
  return v;
}

FockOperator::FockOperator(MatX dense) : op_(std::move(dense)) {}
FockOperator::FockOperator(Sparse sparse) : op_(std::move(sparse)) {}

Eigen::Index FockOperator::dim() const {
  return std::visit([](const auto& m) { return m.rows(); }, op_);
}

VecX FockOperator::apply(const VecX& v) const {
  return std::visit([&v](const auto& m) -> VecX { return m * v; }, op_);
}

MatX FockOperator::to_dense() const {
  if (const auto* d = std::get_if<MatX>(&op_)) return *d;
  return MatX(std::get<Sparse>(op_));
}

namespace {

struct Entry {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

// Nonzero matrix elements of a_j^dag a_k on the basis.
std::vector<Entry> bilinear_entries(int j, int k, const FockBasis& b) {
  std::vector<Entry> out;
  for (std::size_t col = 0; col < b.size(); ++col) {
    const Occupation& m = b[col];
    if (j == k) {
      if (m[j] > 0) {
        out.push_back({static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col),
                       static_cast<double>(m[j])});
      }
      continue;
    }
    if (m[k] == 0) continue;
    int occ[3] = {m.n1, m.n2, m.n3};
    const double amp = std::sqrt(static_cast<double>((occ[j] + 1) * occ[k]));
    occ[j] += 1;
    occ[k] -= 1;
    const std::size_t row = b.index_of({occ[0], occ[1], occ[2]});
    out.push_back({static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), amp});
  }
  return out;
}

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

MatX promote_dense(const Mat3& m, const FockBasis& b) {
  const auto dim = static_cast<Eigen::Index>(b.size());
  MatX out = MatX::Zero(dim, dim);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      if (m(j, k) == cd(0.0)) continue;
      for (const Entry& e : bilinear_entries(j, k, b)) out(e.row, e.col) += m(j, k) * e.value;
    }
  }
  return out;
}

FockOperator promote(const Mat3& m, const FockBasis& b, const FockOptions& opts) {
  if (b.n() <= opts.dense_max_n) return FockOperator(promote_dense(m, b));
  std::vector<Eigen::Triplet<cd>> triplets;
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      if (m(j, k) == cd(0.0)) continue;
      for (const Entry& e : bilinear_entries(j, k, b)) {
        triplets.emplace_back(e.row, e.col, m(j, k) * e.value);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(b.size());
  FockOperator::Sparse s(dim, dim);
  s.setFromTriplets(triplets.begin(), triplets.end());
  return FockOperator(std::move(s));
}

MatX promote_group(const Mat3& g, const FockBasis& b) {
  const auto dim = static_cast<Eigen::Index>(b.size());
  MatX out = MatX::Zero(dim, dim);
  using Poly = std::map<std::array<int, 3>, cd>;
  for (std::size_t col = 0; col < b.size(); ++col) {
    const Occupation& m = b[col];
    // prod_k (sum_j g_jk x_j)^{m_k}
    Poly poly{{{0, 0, 0}, cd(1.0)}};
    for (int k = 0; k < 3; ++k) {
      for (int rep = 0; rep < m[k]; ++rep) {
        Poly next;
        for (const auto& [mono, c] : poly) {
          for (int j = 0; j < 3; ++j) {
            if (g(j, k) == cd(0.0)) continue;
            auto key = mono;
            key[static_cast<std::size_t>(j)] += 1;
            next[key] += c * g(j, k);
          }
        }
        poly = std::move(next);
      }
    }
    // (a^dag)^k |0> = sqrt(k!) |k>; the input state carries 1/sqrt(m!).
    const double norm_in = 0.5 * (log_factorial(m.n1) + log_factorial(m.n2) + log_factorial(m.n3));
    for (const auto& [mono, c] : poly) {
      const double norm_out =
          0.5 * (log_factorial(mono[0]) + log_factorial(mono[1]) + log_factorial(mono[2]));
      const std::size_t row = b.index_of({mono[0], mono[1], mono[2]});
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
          c * std::exp(norm_out - norm_in);
    }
  }
  return out;
}

MatX number_operator(int mode, const FockBasis& b) {
  const auto dim = static_cast<Eigen::Index>(b.size());
  MatX out = MatX::Zero(dim, dim);
  for (std::size_t i = 0; i < b.size(); ++i) {
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = static_cast<double>(b[i][mode]);
  }
  return out;
}

FockSamples propagate_fock(const CouplerFamily& family, const FockVector& psi0,
                           std::span<const double> z_samples, const PropagatorOptions& opts,
                           Evolution evolution) {
  if (!psi0.space) throw ConfigError("propagate_fock: state has no basis");
  if (psi0.amplitudes.size() != static_cast<Eigen::Index>(psi0.space->size())) {
    throw ConfigError("propagate_fock: amplitude count does not match basis(n)");
  }
  if (z_samples.empty()) throw ConfigError("propagate_fock: no sample points");
  const FockBasis& b = *psi0.space;

  // The nine bilinears, transposed for bra evolution.
  std::array<std::vector<Entry>, 9> ops;
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      auto entries = bilinear_entries(j, k, b);
      if (evolution == Evolution::Bra) {
        for (auto& e : entries) std::swap(e.row, e.col);
      }
      ops[static_cast<std::size_t>(3 * j + k)] = std::move(entries);
    }
  }
  const cd factor = evolution == Evolution::Ket ? kI : -kI;
  const ode::Rhs rhs = [&](double z, const VecX& y, VecX& dy) {
    const Mat3 m1 = family.traceless(z);
    if (!all_finite(m1)) throw NumericalError("non-finite coupling matrix", z);
    dy.setZero(y.size());
    for (int jk = 0; jk < 9; ++jk) {
      const cd c = factor * m1(jk / 3, jk % 3);
      if (c == cd(0.0)) continue;
      for (const Entry& e : ops[static_cast<std::size_t>(jk)]) dy[e.row] += c * e.value * y[e.col];
    }
  };

  FockSamples out;
  out.z.assign(z_samples.begin(), z_samples.end());
  out.states.assign(z_samples.size(), FockVector{psi0.space, psi0.amplitudes});
  ode::Options o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  ode::integrate_dopri5(rhs, psi0.amplitudes, 0.0, z_samples.back(), z_samples, o,
                        [&out](std::size_t i, double, const VecX& y) { out.states[i].amplitudes = y; });
  return out;
}

AmplitudeTable amplitudes(const FockVector& psi) {
  AmplitudeTable t;
  t.states = psi.space->states();
  t.P.resize(t.states.size());
  double total = 0.0;
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    t.P[i] = std::norm(psi.amplitudes[static_cast<Eigen::Index>(i)]);
    total += t.P[i];
  }
  if (!(total > 0.0)) throw ConfigError("amplitudes: renormalization undefined for the zero state");
  t.P_tilde.resize(t.P.size());
  for (std::size_t i = 0; i < t.P.size(); ++i) t.P_tilde[i] = t.P[i] / total;
  return t;
}

FockVector PromotedFrame::right(const Occupation& s) const {
  return {space, T.col(static_cast<Eigen::Index>(space->index_of(s)))};
}

FockVector PromotedFrame::left(const Occupation& s) const {
  return {space, T_inv.row(static_cast<Eigen::Index>(space->index_of(s))).transpose()};
}

PromotedFrame promote_frame(const SpectralFrame& frame, std::shared_ptr<const FockBasis> b) {
  PromotedFrame p;
  p.T = promote_group(frame.T, *b);
  p.T_inv = promote_group(frame.T_inv, *b);
  p.eigenvalues.reserve(b->size());
  for (const Occupation& s : b->states()) {
    p.eigenvalues.push_back(static_cast<double>(s.n1) * frame.lambdas[0] +
                            static_cast<double>(s.n2) * frame.lambdas[1] +
                            static_cast<double>(s.n3) * frame.lambdas[2]);
  }
  p.space = std::move(b);
  return p;
}

Populations biorthogonal_populations(const FockVector& right, const FockVector& left) {
  if (!right.space || !left.space || right.space->n() != left.space->n()) {
    throw ConfigError("biorthogonal_populations: left and right live in different subspaces");
  }
  const FockBasis& b = *right.space;
  Populations p;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const cd w = left.amplitudes[ii] * right.amplitudes[ii];
    p.overlap += w;
    for (int j = 0; j < 3; ++j) p.n[static_cast<std::size_t>(j)] += static_cast<double>(b[i][j]) * w;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    p.modulus[j] = std::abs(p.n[j]);
    total += p.modulus[j];
  }
  if (!(total > 0.0)) throw ConfigError("biorthogonal_populations: all populations vanish");
  for (std::size_t j = 0; j < 3; ++j) p.n_tilde[j] = p.n[j] / total;
  return p;
}

Populations biorthogonal_populations(const PromotedFrame& frame, const Occupation& s) {
  return biorthogonal_populations(frame.right(s), frame.left(s));
}

MatX heisenberg(const MatX& u_hat, const MatX& x_hat) {
  return u_hat.partialPivLu().solve(x_hat * u_hat);
}

int numerical_rank(const MatX& a, double threshold) {
  if (a.size() == 0) return 0;
  const Eigen::JacobiSVD<MatX> svd(a);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > threshold) ++r;
  }
  return r;
}

int nilpotency_index(const MatX& a, double tol) {
  const double base = a.norm();
  if (base == 0.0) return 1;
  MatX power = a;
  double scale = base;
  for (Eigen::Index k = 1; k <= a.rows() + 1; ++k) {
    if (numerical_rank(power, tol * scale) == 0) return static_cast<int>(k);
    power = power * a;
    scale *= base;
  }
  return 0;
}

int largest_jordan_block(const MatX& a, cd lambda, double tol) {
  const MatX b = a - lambda * MatX::Identity(a.rows(), a.cols());
  const double base = std::max(b.norm(), 1e-300);
  MatX power = b;
  double scale = base;
  int prev_rank = static_cast<int>(a.rows());
  for (Eigen::Index k = 1; k <= a.rows() + 1; ++k) {
    const int r = numerical_rank(power, tol * scale);
    if (r == prev_rank) return static_cast<int>(k - 1);
    prev_rank = r;
    power = power * b;
    scale *= base;
  }
  return static_cast<int>(a.rows());
}

}  // namespace sl3
