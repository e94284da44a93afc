#pragma once

#include <array>
#include <string>

#include "sl3/family.hpp"
#include "sl3/types.hpp"

namespace sl3 {

/// Isospin-hypercharge generators of sl(3,C). The order is the normal order
/// used by the similarity transform and the propagator factorization.
enum class Generator { Ip, Up, Vp, I0, Y, Vm, Um, Im };

inline constexpr std::array<Generator, 8> kNormalOrder = {
    Generator::Ip, Generator::Up, Generator::Vp, Generator::I0,
    Generator::Y,  Generator::Vm, Generator::Um, Generator::Im};

std::string to_string(Generator g);
bool is_cartan(Generator g);
/// Extraction weight: 2 for I0, 3/2 for Y, 1 for ladder generators.
double weight(Generator g);
/// The 3x3 generator matrix.
Mat3 generator_matrix(Generator g);
/// Elementary matrix O_{j,k} (zero-based indices).
Mat3 elementary(int j, int k);

/// Coordinates of a traceless matrix in the isospin-hypercharge basis.
struct GellMannCoefficients {
  cd mu_I0{};
  cd mu_Y{};
  cd mu_Ip{};
  cd mu_Im{};
  cd mu_Up{};
  cd mu_Um{};
  cd mu_Vp{};
  cd mu_Vm{};

  cd& operator[](Generator g);
  cd operator[](Generator g) const;
};

/// M - (1/3) Tr(M) 1.
Mat3 traceless_part(const Mat3& m);

/// True when |Tr M| <= tol * max(1, |M|).
bool is_traceless(const Mat3& m, double tol = 1e-12);

/// (1/3) times the integral of Tr M(zeta) over [0, z], by adaptive Simpson
/// quadrature. Throws NumericalError on a non-finite trace sample.
cd gauge_phase(const CouplerFamily& family, double z, double tol = 1e-10);

/// Coefficients of a traceless matrix. Ladder sectors pair with the opposite
/// generator (mu_{X+} = Tr[M1 X-]) so that reconstruct() is an exact inverse.
GellMannCoefficients decompose(const Mat3& m1);

Mat3 reconstruct(const GellMannCoefficients& c);

/// exp(i alpha X) in closed form: 1 + i alpha X for ladder generators,
/// a diagonal phase matrix for Cartan generators.
Mat3 exp_generator(Generator g, cd alpha);

Mat3 commutator(const Mat3& a, const Mat3& b);

}  // namespace sl3
