#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include "superwit/models.hpp"

namespace superwit::models {

namespace {

// Dense path below this joint dimension.
constexpr int kDenseMaxDim = 4000;

struct Sector {
  std::vector<int> to_full;  // sector index -> joint index
  std::vector<int> to_sector;
};

Sector even_parity_sector(int spin_dim, int field_dim) {
  Sector s;
  s.to_sector.assign(static_cast<std::size_t>(spin_dim) * field_dim, -1);
  for (int i = 0; i < spin_dim; ++i)
    for (int n = 0; n < field_dim; ++n)
      if ((i + n) % 2 == 0) {
        s.to_sector[i * field_dim + n] = static_cast<int>(s.to_full.size());
        s.to_full.push_back(i * field_dim + n);
      }
  return s;
}

SparseC restrict_to(const SparseC& h, const Sector& s) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (int k = 0; k < h.outerSize(); ++k)
    for (SparseC::InnerIterator it(h, k); it; ++it) {
      const int r = s.to_sector[it.row()], c = s.to_sector[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
      else if (std::abs(it.value()) > 0.0 && (r >= 0) != (c >= 0))
        throw std::logic_error("dicke_ground_state: Hamiltonian couples parity sectors");
    }
  const int d = static_cast<int>(s.to_full.size());
  SparseC out(d, d);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

double DickeParams::g_c() const { return 0.5 * std::sqrt(omega_eg * omega_a); }

void DickeParams::validate() const {
  if (n_particles < 1) throw std::invalid_argument("DickeParams: N must be >= 1");
  if (!(omega_eg > 0.0) || !(omega_a > 0.0)) throw std::invalid_argument("DickeParams: frequencies must be > 0");
  if (!(g >= 0.0)) throw std::invalid_argument("DickeParams: g must be >= 0");
  if (n_max < 1 || n_max_ceiling < n_max) throw std::invalid_argument("DickeParams: bad Fock cutoff");
}

OperatorMatrix dicke_hamiltonian(const DickeParams& p, int n_max) {
  const DickeSpace spin(p.n_particles);
  const FockSpace field(n_max);
  const auto s = build_collective_operators(spin);
  const auto f = build_fock_operators(field);
  const auto is = OperatorMatrix::identity(spin.dim());
  const auto iff = OperatorMatrix::identity(field.dim());
  OperatorMatrix h = tensor(s.z, iff) * cplx(p.omega_eg) + tensor(is, f.n) * cplx(p.omega_a);
  if (p.g != 0.0)
    h += tensor(s.plus + s.minus, f.a + f.a_dag) * cplx(p.g / std::sqrt(static_cast<double>(p.n_particles)));
  return h;
}

DickeGroundState dicke_ground_state(const DickeParams& p, EigenMethod method) {
  p.validate();
  int nm = p.n_max;
  for (;;) {
    const int ns = p.n_particles + 1, nf = nm + 1;
    const Sector sec = even_parity_sector(ns, nf);
    const SparseC h = restrict_to(dicke_hamiltonian(p, nm).sparse(), sec);
    const int full_dim = ns * nf;
    const bool dense = method == EigenMethod::dense || (method == EigenMethod::automatic && full_dim <= kDenseMaxDim);

    double energy = 0.0;
    CVector v;
    std::string how;
    if (dense) {
      const Eigen::MatrixXd hd = CMatrix(h).real();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hd);
      if (es.info() != Eigen::Success) throw std::runtime_error("dicke_ground_state: dense eigensolver failed");
      energy = es.eigenvalues()(0);
      v = es.eigenvectors().col(0).cast<cplx>();
      how = "dense";
    } else {
      const auto ep = lanczos_lowest(h);
      if (!ep.converged) throw std::runtime_error("dicke_ground_state: Lanczos did not converge");
      energy = ep.value;
      v = ep.vector;
      how = "lanczos";
    }
    // Fix the global phase so the largest component is real positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::polar(1.0, -std::arg(v[imax]));

    CVector psi = CVector::Zero(full_dim);
    for (std::size_t k = 0; k < sec.to_full.size(); ++k) psi[sec.to_full[k]] = v[static_cast<Eigen::Index>(k)];

    // Parity leaves every other level empty for a given m, so judge the cutoff
    // on the top two levels.
    double tail = 0.0;
    for (int i = 0; i < ns; ++i) tail += std::norm(psi[i * nf + nm]) + std::norm(psi[i * nf + nm - 1]);
    if (tail < p.tail_tolerance) {
      auto state = CollectiveState::pure(SpaceDescriptor::dicke_fock(p.n_particles, nm), psi, true);
      const auto ops = operators_for(state.space());
      DickeGroundState out{state, energy, expectation(state, ops.n).real() / p.n_particles,
                           expectation(state, ops.s_z).real(), nm, state.fock_tail(), how};
      return out;
    }
    if (nm >= p.n_max_ceiling)
      throw std::runtime_error(fmt::format("dicke_ground_state: Fock cutoff ceiling {} reached (tail {:.3g})",
                                           p.n_max_ceiling, tail));
    nm = std::min(p.n_max_ceiling, nm + std::max(20, nm / 2));
  }
}

// ---------------------------------------------------------------------------

BECGroundState bec_ground_state(const BECParams& p) {
  if (p.n_particles < 1) throw std::invalid_argument("BECParams: N must be >= 1");
  if (!(p.omega_exc > 0.0)) throw std::invalid_argument("BECParams: omega_exc must be > 0");
  if (!(p.u_int >= 0.0)) throw std::invalid_argument("BECParams: U_int must be >= 0");
  const DickeSpace sp(p.n_particles);
  double best = std::numeric_limits<double>::infinity();
  double m_best = -sp.spin();
  bool tie = false;
  for (int i = 0; i < sp.dim(); ++i) {
    const double m = sp.m_of(i);
    const double f = p.omega_exc * m + p.u_int * m * m;
    const double scale = std::max({1.0, std::abs(f), i == 0 ? 0.0 : std::abs(best)});
    if (i == 0 || f < best - 1e-12 * scale) {
      best = f;
      m_best = m;
      tie = false;
    } else if (std::abs(f - best) <= 1e-12 * scale) {
      tie = true;  // m ascends, so the earlier (smaller) m is kept
    }
  }
  return {dicke_state(p.n_particles, m_best), m_best, tie};
}

}  // namespace superwit::models
