#include <doctest.h>

#include <cmath>
#include <random>

#include "superwit/models.hpp"

using namespace superwit;
using namespace superwit::models;

TEST_CASE("Dicke ground state: decoupled limit") {
  DickeParams p;
  p.n_particles = 8;
  CHECK(p.g_c() == doctest::Approx(0.5));
  const auto gs = dicke_ground_state(p);
  CHECK(gs.n_per_N == doctest::Approx(0).epsilon(1e-14));
  CHECK(gs.expSz == doctest::Approx(-4));
  CHECK(gs.energy == doctest::Approx(-4));
}

TEST_CASE("Dicke ground state: order parameter through the transition") {
  DickeParams p;
  p.n_particles = 16;
  p.g = 0.5 * p.g_c();
  CHECK(dicke_ground_state(p).n_per_N < 0.02);
  p.g = 1.5 * p.g_c();
  const auto gs = dicke_ground_state(p);
  CHECK(gs.n_per_N > 0.1);
  CHECK(gs.fock_tail < 1e-8);
  CHECK(std::abs(gs.state.vector().norm() - 1) < 1e-12);
}

TEST_CASE("Dicke ground state: dense and Lanczos agree") {
  DickeParams p;
  p.n_particles = 6;
  p.g = 0.8;
  const auto a = dicke_ground_state(p, EigenMethod::dense);
  const auto b = dicke_ground_state(p, EigenMethod::lanczos);
  CHECK(a.n_max == b.n_max);
  CHECK(b.energy == doctest::Approx(a.energy).epsilon(1e-10));
  CHECK(std::abs(a.state.vector().dot(b.state.vector())) == doctest::Approx(1).epsilon(1e-8));
  CHECK(a.n_per_N == doctest::Approx(b.n_per_N).epsilon(1e-8));
}

TEST_CASE("Dicke parameter validation") {
  DickeParams p;
  p.g = -1;
  CHECK_THROWS(p.validate());
  p = {};
  p.omega_a = 0;
  CHECK_THROWS(dicke_ground_state(p));
  p = {};
  p.n_particles = 4;
  p.g = 3.0;
  p.n_max = 4;
  p.n_max_ceiling = 6;
  CHECK_THROWS(dicke_ground_state(p));
}

TEST_CASE("Lanczos on a random sparse Hermitian matrix") {
  const int d = 300;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  CMatrix a = CMatrix::Zero(d, d);
  for (int k = 0; k < 3000; ++k) {
    const int i = rng() % d, j = rng() % d;
    a(i, j) += cplx(g(rng), g(rng));
  }
  const CMatrix h = a + a.adjoint();
  const auto ep = lanczos_lowest(h.sparseView());
  REQUIRE(ep.converged);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CHECK(ep.value == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
  CHECK((h * ep.vector - ep.value * ep.vector).norm() < 1e-8);
}

TEST_CASE("BEC ground states") {
  CHECK(bec_ground_state({16, 1.0, 0.0}).m_star == -8);
  CHECK_FALSE(bec_ground_state({16, 1.0, 0.0}).tie);
  const auto b = bec_ground_state({16, 1.0, 0.25});
  CHECK(b.m_star == -2);
  CHECK_FALSE(b.tie);
  // f(m) = m + m^2/2: f(-1) = -0.5 beats f(-2) = 0.
  CHECK(bec_ground_state({16, 1.0, 0.5}).m_star == -1);
  // U = 1/3: f(-1) = f(-2) = -2/3, smaller m kept.
  const auto t = bec_ground_state({16, 1.0, 1.0 / 3.0});
  CHECK(t.tie);
  CHECK(t.m_star == -2);
  // Off the edge only past U/N ~ w.
  CHECK(bec_ground_state({16, 1.0, 1.0 / 16}).m_star == -8);
  CHECK(bec_ground_state({16, 1.0, 1.2 / 16}).m_star > -8);
  CHECK_THROWS(bec_ground_state({16, 0.0, 0.1}));
  CHECK_THROWS(bec_ground_state({16, 1.0, -0.1}));
}

TEST_CASE("positions uniform in a ball") {
  SuperradianceParams p;
  p.n_particles = 20000;
  p.radius = 2.0;
  p.seed = 5;
  const auto pos = sample_positions(p);
  double sum = 0, sum2 = 0;
  for (const auto& r : pos) {
    const double d = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    CHECK(d <= 2.0 + 1e-12);
    sum += d;
    sum2 += d * d;
  }
  const double n = pos.size(), mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean - 1.5) < 3 * sd / std::sqrt(n));
  CHECK(sample_positions(p) == pos);
}

TEST_CASE("timed Dicke initial state") {
  SuperradianceParams p;
  p.n_particles = 30;
  const auto s = timed_dicke_initial(sample_positions(p), p.k0());
  CHECK(s.atomic_population() == doctest::Approx(1));
  const auto m = single_excitation_moments(s, true);
  CHECK(m.spin.expR == doctest::Approx(30));
  CHECK(std::abs(m.spin.varR()) < 1e-9);
  const auto origin = timed_dicke_initial(std::vector<Position>(4, Position{0, 0, 0}), p.k0());
  for (int j = 0; j < 4; ++j) CHECK(std::abs(origin.beta[j] - 0.5) < 1e-15);
}

TEST_CASE("decay kernel limits") {
  const double k0 = 2 * std::numbers::pi;
  const auto one = decay_kernel({{0, 0, 0}}, 1.0, k0, false);
  CHECK(one(0, 0) == cplx(0.5));
  const auto same = decay_kernel(std::vector<Position>(5, Position{0, 0, 0}), 1.0, k0, true);
  CHECK((same - CMatrix::Constant(5, 5, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
  const auto far = decay_kernel({{0, 0, 0}, {1e7, 0, 0}}, 1.0, k0, true);
  CHECK(std::abs(far(0, 1)) < 1e-7);
  const auto near = decay_kernel({{0, 0, 0}, {1e-12, 0, 0}}, 1.0, k0, false);
  CHECK(std::isfinite(std::abs(near(0, 1))));
}

TEST_CASE("evolution: exact decay laws") {
  const double k0 = 2 * std::numbers::pi;
  const std::vector<double> t{0, 0.5, 1, 2};
  {
    const std::vector<Position> pos{{0, 0, 0}};
    const auto tr = evolve(decay_kernel(pos, 1.0, k0, false), timed_dicke_initial(pos, k0), t);
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(tr.states[i].atomic_population() == doctest::Approx(std::exp(-t[i])).epsilon(1e-10));
  }
  {
    const int n = 50;
    const std::vector<Position> pos(n, Position{0, 0, 0});
    const std::vector<double> tc{0, 0.005, 0.02, 0.05};
    const auto tr = evolve(decay_kernel(pos, 1.0, k0, false), timed_dicke_initial(pos, k0), tc);
    for (std::size_t i = 0; i < tc.size(); ++i) {
      CHECK(tr.states[i].atomic_population() == doctest::Approx(std::exp(-n * tc[i])).epsilon(1e-8));
      CHECK(std::norm(tr.states[i].gamma_ph) == doctest::Approx(1 - std::exp(-n * tc[i])).epsilon(1e-8));
    }
  }
}

TEST_CASE("evolution: population decays monotonically in a random cloud") {
  SuperradianceParams p;
  p.n_particles = 40;
  p.radius = 1.0;
  const auto pos = sample_positions(p);
  std::vector<double> t;
  for (int i = 0; i <= 20; ++i) t.push_back(0.1 * i);
  for (bool lamb : {false, true}) {
    const auto tr = evolve(decay_kernel(pos, 1.0, p.k0(), lamb), timed_dicke_initial(pos, p.k0()), t);
    for (std::size_t i = 1; i < t.size(); ++i)
      CHECK(tr.states[i].atomic_population() <= tr.states[i - 1].atomic_population() + 1e-12);
    // Collective enhancement at early times.
    const double rate = -std::log(tr.states[1].atomic_population()) / t[1];
    CHECK(rate > 1.5);
  }
  CHECK_THROWS(evolve(CMatrix::Identity(3, 3), timed_dicke_initial(pos, p.k0()), t));
}

TEST_CASE("closed-form single-excitation moments match the brute-force oracle") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 8; ++n)
    for (bool phased : {false, true}) {
      SuperradianceParams p;
      p.n_particles = n;
      p.radius = 0.6;
      p.seed = n;
      SingleExcitationState s = timed_dicke_initial(sample_positions(p), p.k0());
      for (int j = 0; j < n; ++j) s.beta[j] = cplx(g(rng), g(rng));
      s.gamma_ph = cplx(g(rng), g(rng));
      const double norm = std::sqrt(s.beta.squaredNorm() + std::norm(s.gamma_ph));
      s.beta /= norm;
      s.gamma_ph /= norm;
      const auto a = single_excitation_moments(s, phased), b = single_excitation_oracle(s, phased);
      CHECK(std::abs(a.spin.expR - b.spin.expR) < 1e-10);
      CHECK(std::abs(a.spin.expR2 - b.spin.expR2) < 1e-10);
      CHECK(std::abs(a.spin.expSz - b.spin.expSz) < 1e-10);
      CHECK(std::abs(a.joint.expH1 - b.joint.expH1) < 1e-10);
      CHECK(std::abs(a.joint.expH2 - b.joint.expH2) < 1e-10);
      CHECK(std::abs(a.joint.expH1sq - b.joint.expH1sq) < 1e-10);
      CHECK(std::abs(a.joint.expH2sq - b.joint.expH2sq) < 1e-10);
      CHECK(std::abs(a.joint.symH1H2 - b.joint.symH1H2) < 1e-10);
      CHECK(std::abs(a.joint.cross - b.joint.cross) < 1e-10);
      CHECK(std::abs(a.joint.expSmAdag - b.joint.expSmAdag) < 1e-10);
      CHECK(std::abs(a.joint.expRn - b.joint.expRn) < 1e-10);
    }
}
