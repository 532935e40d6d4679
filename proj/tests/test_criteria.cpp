#include <doctest.h>

#include <cmath>
#include <numbers>

#include "superwit/criteria.hpp"

using namespace superwit;
using namespace superwit::criteria;

namespace {

CVector coherent(cplx alpha, int n_max) {
  CVector v(n_max + 1);
  v[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n <= n_max; ++n) v[n] = v[n - 1] * alpha / std::sqrt(double(n));
  return v;
}

CMatrix unitary_from_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0, -t)).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Coherent spin state pointing along theta from the excited pole, built by rotating |S,-S>.
CVector css(int n, double theta) {
  const auto s = build_collective_operators(DickeSpace(n));
  return unitary_from_hermitian(s.y.dense(), std::numbers::pi - theta) * dicke_state(n, -n / 2.0).vector();
}

}  // namespace

TEST_CASE("verdict band") {
  CHECK(verdict_for(-1e-3, 1e-6) == Verdict::entangled);
  CHECK(verdict_for(-1e-7, 1e-6) == Verdict::undetected);
  CHECK(verdict_for(1.0, 1e-6) == Verdict::undetected);
  CHECK(single_mode_variant_from_string("as_printed") == SingleModeVariant::as_printed);
  CHECK_FALSE(single_mode_variant_from_string("nope").has_value());
}

TEST_CASE("xi_new on Dicke states") {
  const int n = 16;
  const auto lo = xi_new(dicke_state(n, -8));
  const auto hi = xi_new(dicke_state(n, 8));
  CHECK(std::abs(lo.value) < 1e-6);
  CHECK(std::abs(hi.value) < 1e-6);
  CHECK_FALSE(lo.detected());
  const auto mid = xi_new(dicke_state(n, 0));
  CHECK(mid.value < -1);
  CHECK(mid.detected());
  CHECK(mid.term_sum() == doctest::Approx(mid.value).epsilon(1e-12));
  REQUIRE(mid.moments.has_value());
  CHECK(mid.moments->expR == doctest::Approx(72));
  CHECK(mid.to_json().contains("diagnostics"));
}

TEST_CASE("xi_new on a product state is not flagged") {
  const auto st = CollectiveState::pure(SpaceDescriptor::dicke(8), css(8, 1.1));
  CHECK(xi_new(st).value >= -1e-6);
}

TEST_CASE("linear entropy Q") {
  const int n = 16;
  for (int i = 0; i <= n; ++i) {
    const double m = -8 + i;
    CHECK(linear_entropy_Q(dicke_state(n, m)) == doctest::Approx(1 - 4 * m * m / 256.0).epsilon(1e-12));
  }
  // Partial-trace path at N=6 agrees.
  for (int i = 0; i <= 6; ++i) {
    const auto sym = dicke_state(6, -3 + i);
    const auto full = CollectiveState::pure(SpaceDescriptor::full(6), symmetric_to_full(sym.vector(), 6));
    CHECK(linear_entropy_Q(full) == doctest::Approx(linear_entropy_Q(sym)).epsilon(1e-12));
  }
  // Invariant under collective rotations.
  const auto st = random_state(RandomStateKind::symmetric, 10, 4);
  const auto s = build_collective_operators(DickeSpace(10));
  const CMatrix h = (s.x.dense() * 0.3 + s.y.dense() * 0.8 + s.z.dense() * -0.5);
  const auto rot = CollectiveState::pure(st.space(), unitary_from_hermitian(h, 1.3) * st.vector(), true);
  CHECK(std::abs(linear_entropy_Q(rot) - linear_entropy_Q(st)) < 1e-10);
}

TEST_CASE("spin squeezing parameter") {
  const int n = 16;
  CHECK(std::abs(xi_spin(dicke_state(n, -8)).value) < 1e-9);
  const auto tilted = css(n, 1.0);
  CHECK(std::abs(xi_spin(CollectiveState::pure(SpaceDescriptor::dicke(n), tilted)).value) < 1e-9);

  // One-axis twisting of a CSS on the equator.
  const auto s = build_collective_operators(DickeSpace(n));
  const CMatrix sz2 = s.z.dense() * s.z.dense();
  const auto twisted = CollectiveState::pure(SpaceDescriptor::dicke(n),
                                             unitary_from_hermitian(sz2, 0.05) * css(n, std::numbers::pi / 2), true);
  CHECK(xi_spin(twisted).value < 0);

  const auto flat = xi_spin(dicke_state(n, 0));
  CHECK_FALSE(flat.detected());
  CHECK_FALSE(flat.reason.empty());
}

TEST_CASE("single-mode witness") {
  const int nm = 60;
  CVector f3 = CVector::Zero(nm + 1);
  f3[3] = 1;
  const auto fock3 = CollectiveState::pure(SpaceDescriptor::fock(nm), f3);
  CHECK(single_mode_witness(fock3, SingleModeVariant::central_moment, 180).value == doctest::Approx(-3));
  CHECK(single_mode_witness(fock3, SingleModeVariant::as_printed, 180).value == doctest::Approx(-3));

  for (cplx a : {cplx(0.5, 0), cplx(1.0, 1.0), cplx(-2.0, 0.7), cplx(0, 2.5)}) {
    const auto st = CollectiveState::pure(SpaceDescriptor::fock(nm), coherent(a, nm), true);
    const auto r = single_mode_witness(st, SingleModeVariant::central_moment, 180);
    CHECK(std::abs(r.value) < 1e-10);
    CHECK(r.term_sum() == doctest::Approx(r.value));
    CHECK(std::abs(mandel_q_field(st)) < 1e-10);
  }

  // Thermal, nbar = 2.
  const int nt = 120;
  CMatrix rho = CMatrix::Zero(nt + 1, nt + 1);
  for (int n = 0; n <= nt; ++n) rho(n, n) = std::pow(2.0 / 3.0, n) / 3.0;
  rho /= rho.trace();
  const auto th = CollectiveState::density(SpaceDescriptor::fock(nt), rho);
  CHECK(single_mode_witness(th, SingleModeVariant::central_moment, 180).value == doctest::Approx(4).epsilon(1e-8));

  CVector vac = CVector::Unit(nm + 1, 0);
  CHECK(mandel_q_field(CollectiveState::pure(SpaceDescriptor::fock(nm), vac)) == 0);
}

TEST_CASE("ensemble-field witnesses on product states") {
  const int n = 6, nm = 40;
  const auto ground = dicke_state(n, -3).vector();
  const auto vac = dicke_fock_product(ground, CVector::Unit(nm + 1, 0), n, nm);
  const auto sr = mu_SR(vac);
  CHECK(sr.value == doctest::Approx(0).epsilon(1e-12));
  CHECK(sr.term_sum() == doctest::Approx(sr.value));
  CHECK(std::abs(mu_HZ(vac).value) < 1e-12);
  CHECK(std::abs(mu_spin(vac).value) < 1e-9);

  for (cplx a : {cplx(0.3, 0), cplx(1, -1), cplx(0, 2)}) {
    const auto st = dicke_fock_product(ground, coherent(a, nm), n, nm);
    CHECK(mu_SR(st).value >= -1e-8);
    CHECK(mu_HZ(st).value >= -1e-8);
    CHECK(std::abs(mu_spin(st).value) < 1e-9);
  }
  // A tilted coherent spin state with a coherent field.
  const auto st = dicke_fock_product(css(n, 2.0), coherent({0.7, 0.4}, nm), n, nm);
  CHECK(mu_SR(st).value >= -1e-8);
  CHECK(mu_HZ(st).value >= -1e-8);
}

TEST_CASE("mu_HZ on the N=2 Bell-like state") {
  // n_max = 3 leaves the top Fock levels empty so the tail check passes.
  CVector v = CVector::Zero(3 * 4);
  v[1 * 4 + 0] = std::sqrt(0.5);  // |1,0>|0>
  v[0 * 4 + 1] = std::sqrt(0.5);  // |1,-1>|1>
  const auto st = CollectiveState::pure(SpaceDescriptor::dicke_fock(2, 3), v);
  CHECK(mu_HZ(st).value == doctest::Approx(-0.5));
  CHECK(mu_HZ(st).detected());
}

TEST_CASE("truncated field gives an invalid report") {
  const int n = 2, nm = 3;
  CVector field = CVector::Zero(nm + 1);
  field[0] = std::sqrt(0.5);
  field[nm] = std::sqrt(0.5);
  const auto st = dicke_fock_product(dicke_state(n, -1).vector(), field, n, nm);
  CHECK(mu_SR(st).verdict == Verdict::invalid);
  CHECK(mu_HZ(st).verdict == Verdict::invalid);
}

TEST_CASE("joint moments from the struct overloads") {
  const int n = 4, nm = 30;
  const auto st = dicke_fock_product(css(n, 2.4), coherent({0.6, 0.2}, nm), n, nm);
  const auto jm = joint_moments(st);
  CHECK(mu_SR(jm).value == doctest::Approx(mu_SR(st).value).epsilon(1e-12));
  CHECK(mu_HZ(jm).value == doctest::Approx(mu_HZ(st).value).epsilon(1e-12));
}

TEST_CASE("atomic g^(k)") {
  const auto g = dicke_state(16, -8);
  CHECK(gn_wavefunction(g, {}, 2) == doctest::Approx(0.9375));
  CHECK(gn_wavefunction(g, {}, 1) == doctest::Approx(1));
  CHECK(gn_wavefunction(g, {}, 3) == doctest::Approx(15.0 * 14 / 256));
  CHECK_THROWS(gn_wavefunction(g, {}, 5));
  ModePair sw{ModeKind::standing_wave, 1.0};
  CHECK(gn_wavefunction(g, sw, 2) == doctest::Approx(0.9375));
}
