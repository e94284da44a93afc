#include <doctest.h>

#include "oracles.hpp"
#include "sl3/algebra.hpp"
#include "sl3/families.hpp"

using namespace sl3;

namespace {

Mat3 diag3(cd a, cd b, cd c) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

double rel_err(const Mat3& a, const Mat3& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("traceless_part removes the trace and is idempotent") {
  CHECK(traceless_part(Mat3::Identity()).norm() < 1e-15);
  const Mat3 d = diag3(kI, 0.0, -kI);
  CHECK(rel_err(traceless_part(d), d) < 1e-16);

  const Mat3 m = diag3(cd(1, 1), 1.0, 1.0);
  const Mat3 t = traceless_part(m);
  CHECK(std::abs(t.trace()) < 1e-14);
  CHECK(rel_err(t, m - (cd(3, 1) / 3.0) * Mat3::Identity()) < 1e-15);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const Mat3 r = oracle::random_matrix(rng, 3.0);
    const Mat3 t1 = traceless_part(r);
    CHECK(std::abs(t1.trace()) < 1e-14 * std::max(1.0, r.norm()));
    CHECK(rel_err(traceless_part(t1), t1) < 1e-15);
    const Mat3 diff = r - t1;
    CHECK(std::abs(diff(0, 1)) + std::abs(diff(1, 2)) + std::abs(diff(2, 0)) == 0.0);
    CHECK(std::abs(diff(0, 0) - diff(2, 2)) < 1e-14 * r.norm());
  }
}

TEST_CASE("gauge_phase integrates a third of the trace") {
  CHECK(std::abs(gauge_phase(pt_cyclic(1.0, 1.5, 3.5), 4.0)) < 1e-14);
  CHECK(std::abs(gauge_phase(CouplerFamily::constant(kI * Mat3::Identity()), 2.0) - cd(0, 2)) < 1e-12);
  const auto ramp = CouplerFamily::custom([](double z) { return diag3(z, 0.0, 0.0); });
  CHECK(std::abs(gauge_phase(ramp, 1.0) - 1.0 / 6.0) < 1e-12);
  const auto oscill = CouplerFamily::custom([](double z) { return diag3(std::cos(z), 0.0, 0.0); });
  CHECK(std::abs(gauge_phase(oscill, 3.0) - std::sin(3.0) / 3.0) < 1e-10);
  const auto bad = CouplerFamily::custom([](double z) {
    return diag3(z > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0, 0.0, 0.0);
  });
  CHECK_THROWS_AS(gauge_phase(bad, 1.0), NumericalError);
}

TEST_CASE("decompose recovers basis elements") {
  for (const Generator g : kNormalOrder) {
    const GellMannCoefficients c = decompose(generator_matrix(g));
    for (const Generator h : kNormalOrder) CHECK(std::abs(c[h] - (g == h ? 1.0 : 0.0)) < 1e-15);
  }
}

TEST_CASE("decompose of the trimer matrix") {
  const GellMannCoefficients c = decompose(pt_cyclic(1.0, 2.0, 3.0).matrix(0.0));
  CHECK(std::abs(c.mu_I0 - kI) < 1e-15);
  CHECK(std::abs(c.mu_Y - 1.5 * kI) < 1e-15);
  for (cd v : {c.mu_Ip, c.mu_Im, c.mu_Up, c.mu_Um}) CHECK(std::abs(v - 2.0) < 1e-15);
  for (cd v : {c.mu_Vp, c.mu_Vm}) CHECK(std::abs(v - 3.0) < 1e-15);
  CHECK_THROWS_AS(decompose(Mat3::Identity()), NotTracelessError);
}

TEST_CASE("reconstruct examples and round trips") {
  CHECK(reconstruct(GellMannCoefficients{}).norm() == 0.0);
  GellMannCoefficients c;
  c.mu_I0 = 2.0;
  CHECK(rel_err(reconstruct(c), diag3(1.0, -1.0, 0.0)) < 1e-16);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 1000; ++k) {
    const Mat3 m = oracle::random_traceless(rng, 2.0);
    CHECK(rel_err(reconstruct(decompose(m)), m) < 1e-13);
    GellMannCoefficients r;
    for (const Generator g : kNormalOrder) r[g] = cd(nd(rng), nd(rng));
    const Mat3 back = reconstruct(r);
    CHECK(std::abs(back.trace()) < 1e-13 * back.norm());
    const GellMannCoefficients again = decompose(back);
    for (const Generator g : kNormalOrder) CHECK(std::abs(again[g] - r[g]) < 1e-13 * std::max(1.0, std::abs(r[g])) * 4);
  }
}

TEST_CASE("exp_generator closed forms") {
  const cd a(0.3, -0.7);
  Mat3 ip = Mat3::Identity();
  ip(0, 1) = kI * a;
  CHECK(rel_err(exp_generator(Generator::Ip, a), ip) < 1e-16);
  CHECK(rel_err(exp_generator(Generator::I0, a), diag3(std::exp(kI * a / 2.0), std::exp(-kI * a / 2.0), 1.0)) <
        1e-15);
  CHECK(rel_err(exp_generator(Generator::Y, a),
                diag3(std::exp(kI * a / 3.0), std::exp(kI * a / 3.0), std::exp(-2.0 * kI * a / 3.0))) < 1e-15);
  for (const Generator g : kNormalOrder) {
    const Mat3 ref = oracle::expm3(kI * a * generator_matrix(g));
    CHECK(rel_err(exp_generator(g, a), ref) < 1e-13);
  }
}

TEST_CASE("generator weights and nilpotent ladders") {
  CHECK(weight(Generator::I0) == 2.0);
  CHECK(weight(Generator::Y) == 1.5);
  for (const Generator g : kNormalOrder) {
    if (is_cartan(g)) continue;
    CHECK(weight(g) == 1.0);
    const Mat3 x = generator_matrix(g);
    CHECK((x * x).norm() == 0.0);
  }
  // Cartan normalization Tr[X X] w_X = 1.
  for (const Generator g : {Generator::I0, Generator::Y}) {
    const Mat3 x = generator_matrix(g);
    CHECK(std::abs((x * x).trace() * weight(g) - 1.0) < 1e-15);
  }
}

TEST_CASE("commutator table of the elementary operators") {
  const Mat3 i0 = generator_matrix(Generator::I0);
  const Mat3 ip = generator_matrix(Generator::Ip);
  CHECK((commutator(i0, ip) - ip).norm() < 1e-16);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
          Mat3 expected = Mat3::Zero();
          if (k == m) expected += elementary(j, n);
          if (j == n) expected -= elementary(m, k);
          CHECK((commutator(elementary(j, k), elementary(m, n)) - expected).norm() == 0.0);
        }
      }
    }
  }
}
