#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "superwit/models.hpp"

namespace superwit::models {

double SuperradianceParams::k0() const { return 2.0 * std::numbers::pi / wavelength; }

CVector SingleExcitationState::timed_dicke_phases() const {
  const int n = static_cast<int>(positions.size());
  CVector out(n);
  for (int j = 0; j < n; ++j) out[j] = std::polar(1.0, k0 * positions[j][2]);
  return out;
}

std::vector<double> SingleExcitationState::phase_angles() const {
  std::vector<double> out(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) out[j] = k0 * positions[j][2];
  return out;
}

std::vector<Position> sample_positions(const SuperradianceParams& p) {
  if (p.n_particles < 1) throw std::invalid_argument("sample_positions: N must be >= 1");
  if (!(p.radius > 0.0) || !(p.wavelength > 0.0)) throw std::invalid_argument("sample_positions: R and wavelength must be > 0");
  std::mt19937_64 rng(p.seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double rmax = p.radius * p.wavelength;
  std::vector<Position> out(static_cast<std::size_t>(p.n_particles));
  for (auto& r : out) {
    // radius by inverse CDF, direction uniform on the sphere
    const double rad = rmax * std::cbrt(unit());
    const double cz = 2.0 * unit() - 1.0;
    const double az = 2.0 * std::numbers::pi * unit();
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    r = {rad * sz * std::cos(az), rad * sz * std::sin(az), rad * cz};
  }
  return out;
}

SingleExcitationState timed_dicke_initial(const std::vector<Position>& positions, double k0) {
  if (positions.empty()) throw std::invalid_argument("timed_dicke_initial: no atoms");
  SingleExcitationState s;
  s.positions = positions;
  s.k0 = k0;
  s.beta = s.timed_dicke_phases() / std::sqrt(static_cast<double>(positions.size()));
  return s;
}

CMatrix decay_kernel(const std::vector<Position>& positions, double gamma, double k0, bool lamb_shift) {
  const int n = static_cast<int>(positions.size());
  CMatrix m(n, n);
  for (int j = 0; j < n; ++j) {
    m(j, j) = 0.5 * gamma;
    for (int l = j + 1; l < n; ++l) {
      const double dx = positions[j][0] - positions[l][0], dy = positions[j][1] - positions[l][1],
                   dz = positions[j][2] - positions[l][2];
      const double kr = k0 * std::sqrt(dx * dx + dy * dy + dz * dz);
      cplx v;
      if (kr < 1e-8) {
        v = 0.5 * gamma;  // sinc -> 1; the divergent Lamb term is dropped for coincident pairs
      } else {
        v = 0.5 * gamma * cplx(std::sin(kr) / kr, lamb_shift ? std::cos(kr) / kr : 0.0);
      }
      m(j, l) = m(l, j) = v;
    }
  }
  return m;
}

namespace {

// Classical RK4 with step doubling for d beta/dt = -M beta.
CVector rk_integrate(const CMatrix& m, CVector y, double t0, double t1, double& h, double tol) {
  auto f = [&](const CVector& v) -> CVector { return -(m * v); };
  auto rk4 = [&](const CVector& v, double dt) {
    const CVector k1 = f(v), k2 = f(v + 0.5 * dt * k1), k3 = f(v + 0.5 * dt * k2), k4 = f(v + dt * k3);
    return CVector(v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  double t = t0;
  int guard = 0;
  while (t < t1) {
    if (++guard > 10000000) throw std::runtime_error("evolve: ODE integrator exceeded step budget");
    const double dt = std::min(h, t1 - t);
    const CVector big = rk4(y, dt);
    const CVector small = rk4(rk4(y, 0.5 * dt), 0.5 * dt);
    const double err = (big - small).norm() / 15.0;
    if (err <= tol * std::max(1.0, small.norm())) {
      y = small + (small - big) / 15.0;
      t += dt;
      h = dt * std::min(4.0, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2));
    } else {
      h = dt * std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
      if (h < 1e-14 * std::max(1.0, t1)) throw std::runtime_error("evolve: ODE step size underflow");
    }
  }
  return y;
}

}  // namespace

Trajectory evolve(const CMatrix& m, const SingleExcitationState& initial, const std::vector<double>& t_grid) {
  const int n = initial.size();
  if (static_cast<int>(initial.positions.size()) != n) throw std::invalid_argument("evolve: positions/amplitudes size mismatch");
  if (m.rows() != n || m.cols() != n) throw std::invalid_argument("evolve: kernel/state size mismatch");
  if (t_grid.empty() || t_grid.front() != 0.0) throw std::invalid_argument("evolve: time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw std::invalid_argument("evolve: time grid must be strictly increasing");

  Trajectory traj;
  traj.t = t_grid;
  const CVector td = initial.timed_dicke_phases() / std::sqrt(static_cast<double>(n));
  const CVector beta0 = initial.beta;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());

  std::vector<CVector> betas;
  betas.reserve(t_grid.size());
  const bool hermitian = (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * scale;
  bool done = false;
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    if (es.info() == Eigen::Success) {
      const CVector coeff = es.eigenvectors().adjoint() * beta0;
      for (double t : t_grid) {
        const CVector e = (-es.eigenvalues().array() * t).exp().cast<cplx>();
        betas.push_back(es.eigenvectors() * (e.array() * coeff.array()).matrix());
      }
      traj.method = "eigen_hermitian";
      done = true;
    }
  } else {
    Eigen::ComplexEigenSolver<CMatrix> es(m);
    if (es.info() == Eigen::Success) {
      const CMatrix& v = es.eigenvectors();
      Eigen::PartialPivLU<CMatrix> lu(v);
      const CVector coeff = lu.solve(beta0);
      const double recon = (v * coeff - beta0).norm();
      const double resid = (m * v - v * es.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
      // Near-defective kernels make V ill-conditioned; fall back to the integrator.
      if (recon <= 1e-10 && resid <= 1e-10 * scale && coeff.norm() < 1e6) {
        for (double t : t_grid) {
          const CVector e = (-es.eigenvalues().array() * t).exp();
          betas.push_back(v * (e.array() * coeff.array()).matrix());
        }
        traj.method = "eigen_general";
        done = true;
      }
    }
  }
  if (!done) {
    double h = 0.1 / scale;
    CVector y = beta0;
    betas.push_back(y);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      y = rk_integrate(m, y, t_grid[k - 1], t_grid[k], h, 1e-10);
      betas.push_back(y);
    }
    traj.method = "rk4_step_doubling";
  }

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    SingleExcitationState s;
    s.positions = initial.positions;
    s.k0 = initial.k0;
    s.beta = betas[k];
    const double p = s.atomic_population();
    if (p > prev + 1e-8) throw std::runtime_error("evolve: atomic population grew (integrator failure)");
    prev = std::min(prev, p);
    const double lost = initial.atomic_population() + std::norm(initial.gamma_ph) - p;
    if (lost < -1e-8) throw std::runtime_error("evolve: norm exceeds one");
    const cplx overlap = td.dot(beta0 - s.beta);  // conj(td) . (beta0 - beta)
    const double phase = std::abs(overlap) > 0.0 ? std::arg(overlap) : 0.0;
    s.gamma_ph = std::polar(std::sqrt(std::max(0.0, lost)), phase);
    traj.states.push_back(std::move(s));
  }
  return traj;
}

// ---------------------------------------------------------------------------

namespace {

CVector lowering_phases(const SingleExcitationState& s, bool phased) {
  // S- = sum_j e^{-i phi_j} s-_j
  CVector w(s.size());
  for (int j = 0; j < s.size(); ++j) w[j] = phased ? std::polar(1.0, -s.k0 * s.positions[j][2]) : cplx(1.0);
  return w;
}

}  // namespace

SingleExcitationMoments single_excitation_moments(const SingleExcitationState& s, bool phased) {
  const int n = s.size();
  const double nd = n;
  const CVector w = lowering_phases(s, phased);
  const cplx c = (w.array() * s.beta.array()).sum();
  const double c2 = std::norm(c);
  const double pop = s.atomic_population();
  const cplx g = s.gamma_ph;

  SingleExcitationMoments out;
  out.spin.n_particles = n;
  out.spin.expR = c2;
  out.spin.expR2 = nd * c2;
  out.spin.expSz = -0.5 * nd + pop;

  auto& j = out.joint;
  j.expSz = out.spin.expSz;
  j.expH1 = 2.0 * (std::conj(g) * c).real();
  j.expH2 = -2.0 * (g * std::conj(c)).imag();
  j.expH1sq = j.expH2sq = c2 + nd * std::norm(g);
  j.symH1H2 = 0.0;
  j.cross = -c2 + 2.0 * (pop * (-0.5 * nd + 1.0) - nd * std::norm(g));
  j.expRn = 0.0;
  j.expSmAdag = std::conj(g) * c;
  j.expSmA = 0.0;
  j.fock_tail = 0.0;
  return out;
}

SingleExcitationMoments single_excitation_oracle(const SingleExcitationState& s, bool phased) {
  const int n = s.size();
  if (n < 1 || n > 10) throw std::invalid_argument("single_excitation_oracle: requires 1 <= N <= 10");
  constexpr int kField = 3;  // photon levels 0, 1, 2 so that a a^+ |1> is exact
  const int sd = 1 << n;

  CVector psi = CVector::Zero(sd * kField);
  for (int j = 0; j < n; ++j) psi[(1 << (n - 1 - j)) * kField + 0] = s.beta[j];
  psi[0 * kField + 1] = s.gamma_ph;

  std::vector<double> ph;
  if (phased) ph = s.phase_angles();
  const auto so = build_full_collective_operators(n, ph);
  const auto fo = build_fock_operators(FockSpace(kField - 1));
  const auto is = OperatorMatrix::identity(sd);
  const auto iff = OperatorMatrix::identity(kField);

  const auto sp = tensor(so.plus, iff), sm = tensor(so.minus, iff), sz = tensor(so.z, iff);
  const auto a = tensor(is, fo.a), ad = tensor(is, fo.a_dag), nn = tensor(is, fo.n);
  const auto r = sp * sm;
  const auto h1 = sp * a + sm * ad;
  const auto h2 = cplx(0.0, 1.0) * (sp * a - sm * ad);

  auto ev = [&](const OperatorMatrix& op) { return psi.dot(op.apply(psi)); };

  SingleExcitationMoments out;
  out.spin.n_particles = n;
  out.spin.expR = ev(r).real();
  out.spin.expR2 = ev(r * r).real();
  out.spin.expSz = ev(sz).real();

  auto& j = out.joint;
  j.expSz = out.spin.expSz;
  j.expH1 = ev(h1).real();
  j.expH2 = ev(h2).real();
  j.expH1sq = ev(h1 * h1).real();
  j.expH2sq = ev(h2 * h2).real();
  j.symH1H2 = 0.5 * (ev(h1 * h2) + ev(h2 * h1)).real();
  j.cross = ev(cplx(-1.0) * r + cplx(2.0) * (sz * a * ad));
  j.expRn = ev(r * nn).real();
  j.expSmAdag = ev(sm * ad);
  j.expSmA = ev(sm * a);
  double tail = 0.0;
  for (int i = 0; i < sd; ++i) tail += std::norm(psi[i * kField + kField - 1]);
  j.fock_tail = tail;
  return out;
}

}  // namespace superwit::models
