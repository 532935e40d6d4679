#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

#include "superwit/hilbert.hpp"
#include "superwit/log.hpp"

namespace superwit {

namespace {

using RowMajorC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_dim(const CollectiveState& s, const OperatorMatrix& op, const char* what) {
  if (s.dim() != op.dim())
    throw std::invalid_argument(fmt::format("{}: state dim {} does not match operator dim {}", what,
                                            s.dim(), op.dim()));
}

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

std::string to_string(SpaceType t) {
  switch (t) {
    case SpaceType::dicke: return "dicke";
    case SpaceType::dicke_fock: return "dicke_fock";
    case SpaceType::full: return "full";
    case SpaceType::fock: return "fock";
  }
  return "?";
}

std::optional<SpaceType> space_type_from_string(const std::string& s) {
  if (s == "dicke") return SpaceType::dicke;
  if (s == "dicke_fock") return SpaceType::dicke_fock;
  if (s == "full") return SpaceType::full;
  if (s == "fock") return SpaceType::fock;
  return std::nullopt;
}

int SpaceDescriptor::spin_dim() const {
  switch (type) {
    case SpaceType::dicke:
    case SpaceType::dicke_fock:
      if (n_particles < 1) throw std::invalid_argument("space: N must be >= 1");
      return n_particles + 1;
    case SpaceType::full:
      if (n_particles < 1) throw std::invalid_argument("space: N must be >= 1");
      if (n_particles > kFullSpaceFlaggedMaxN)
        throw std::length_error(fmt::format("space: full 2^N space capped at N = {}", kFullSpaceFlaggedMaxN));
      return 1 << n_particles;
    case SpaceType::fock: return 1;
  }
  return 1;
}

int SpaceDescriptor::field_dim() const {
  if (!has_field()) return 1;
  if (n_max < 0) throw std::invalid_argument("space: n_max must be >= 0");
  return n_max + 1;
}

int SpaceDescriptor::dim() const { return spin_dim() * field_dim(); }

CollectiveState CollectiveState::pure(SpaceDescriptor space, CVector amplitudes, bool normalize,
                                      double tol) {
  if (amplitudes.size() != space.dim())
    throw std::invalid_argument(fmt::format("pure state: {} amplitudes for a space of dim {}",
                                            amplitudes.size(), space.dim()));
  const double nrm = amplitudes.norm();
  if (normalize) {
    if (nrm == 0.0) throw std::invalid_argument("pure state: zero vector");
    amplitudes /= nrm;
  } else if (std::abs(nrm - 1.0) > tol) {
    throw std::invalid_argument(fmt::format("pure state: norm {} differs from 1", nrm));
  }
  return CollectiveState(space, std::move(amplitudes));
}

CollectiveState CollectiveState::density(SpaceDescriptor space, CMatrix rho, double tol) {
  const int d = space.dim();
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument(
        fmt::format("density matrix: shape {}x{} for a space of dim {}", rho.rows(), rho.cols(), d));
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("density matrix: not Hermitian");
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > tol) throw std::invalid_argument(fmt::format("density matrix: trace {} != 1", tr.real()));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol)
    throw std::invalid_argument(
        fmt::format("density matrix: negative eigenvalue {}", es.eigenvalues().minCoeff()));
  return CollectiveState(space, std::move(rho));
}

const CVector& CollectiveState::vector() const {
  if (!is_pure()) throw std::logic_error("state is a density matrix");
  return std::get<CVector>(data_);
}

const CMatrix& CollectiveState::matrix() const {
  if (is_pure()) throw std::logic_error("state is a pure vector");
  return std::get<CMatrix>(data_);
}

CMatrix CollectiveState::density_matrix() const {
  if (is_pure()) {
    const CVector& v = vector();
    return v * v.adjoint();
  }
  return matrix();
}

double CollectiveState::fock_tail() const {
  if (!space_.has_field()) return 0.0;
  const int ns = space_.spin_dim(), nf = space_.field_dim();
  double tail = 0.0;
  for (int i = 0; i < ns; ++i) {
    const int idx = i * nf + (nf - 1);
    tail += is_pure() ? std::norm(vector()[idx]) : matrix()(idx, idx).real();
  }
  return tail;
}

CMatrix CollectiveState::reduced_spin() const {
  const int ns = space_.spin_dim(), nf = space_.field_dim();
  if (nf == 1) return density_matrix();
  if (is_pure()) {
    Eigen::Map<const RowMajorC> psi(vector().data(), ns, nf);
    return psi * psi.adjoint();
  }
  CMatrix out = CMatrix::Zero(ns, ns);
  const CMatrix& r = matrix();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j)
      for (int n = 0; n < nf; ++n) out(i, j) += r(i * nf + n, j * nf + n);
  return out;
}

CMatrix CollectiveState::reduced_field() const {
  const int ns = space_.spin_dim(), nf = space_.field_dim();
  if (!space_.has_field()) throw std::invalid_argument("reduced_field: state has no field factor");
  if (is_pure()) {
    Eigen::Map<const RowMajorC> psi(vector().data(), ns, nf);
    return (psi.transpose() * psi.conjugate());
  }
  CMatrix out = CMatrix::Zero(nf, nf);
  const CMatrix& r = matrix();
  for (int i = 0; i < ns; ++i)
    for (int n = 0; n < nf; ++n)
      for (int k = 0; k < nf; ++k) out(n, k) += r(i * nf + n, i * nf + k);
  return out;
}

CollectiveState dicke_state(int n_particles, double m) {
  DickeSpace space(n_particles);
  CVector v = CVector::Zero(space.dim());
  v[space.index_of(m)] = 1.0;
  return CollectiveState::pure(SpaceDescriptor::dicke(n_particles), std::move(v));
}

CollectiveState dicke_fock_product(const CVector& spin, const CVector& field, int n_particles, int n_max) {
  if (spin.size() != n_particles + 1 || field.size() != n_max + 1)
    throw std::invalid_argument("dicke_fock_product: factor dimensions do not match the space");
  CVector v(spin.size() * field.size());
  for (Eigen::Index i = 0; i < spin.size(); ++i) v.segment(i * field.size(), field.size()) = spin[i] * field;
  return CollectiveState::pure(SpaceDescriptor::dicke_fock(n_particles, n_max), std::move(v), true);
}

CVector symmetric_to_full(const CVector& dicke_amplitudes, int n_particles) {
  if (dicke_amplitudes.size() != n_particles + 1)
    throw std::invalid_argument("symmetric_to_full: amplitude count must be N + 1");
  if (n_particles > kFullSpaceFlaggedMaxN) throw std::length_error("symmetric_to_full: N too large");
  const int d = 1 << n_particles;
  CVector out(d);
  for (int idx = 0; idx < d; ++idx) {
    const int k = std::popcount(static_cast<unsigned>(idx));
    out[idx] = dicke_amplitudes[k] / std::sqrt(binomial(n_particles, k));
  }
  return out;
}

cplx expectation(const CollectiveState& state, const OperatorMatrix& op) {
  require_dim(state, op, "expectation");
  if (state.is_pure()) {
    const CVector& v = state.vector();
    return v.dot(op.sparse() * v);
  }
  const CMatrix& r = state.matrix();
  const SparseC& a = op.sparse();
  cplx acc = 0.0;
  for (int i = 0; i < a.outerSize(); ++i)
    for (SparseC::InnerIterator it(a, i); it; ++it) acc += it.value() * r(it.col(), it.row());
  return acc;
}

double variance(const CollectiveState& state, const OperatorMatrix& op) {
  require_dim(state, op, "variance");
  const double scale = std::max(1.0, op.max_abs());
  if (!op.is_hermitian(1e-12 * scale)) throw std::invalid_argument("variance: operator is not Hermitian");
  double second = 0.0;
  if (state.is_pure()) {
    second = (op.sparse() * state.vector()).squaredNorm();
  } else {
    second = expectation(state, op * op).real();
  }
  const double mean = expectation(state, op).real();
  const double var = second - mean * mean;
  if (var >= 0.0) return var;
  const double window = 1e-10 * std::max(1.0, std::abs(second));
  if (var < -window)
    throw std::domain_error(fmt::format("variance: negative value {} beyond tolerance", var));
  if (var < -1e-12 * std::max(1.0, std::abs(second)))
    warn(fmt::format("variance: clamped round-off negative value {} to 0", var));
  return 0.0;
}

double sym_covariance(const CollectiveState& state, const OperatorMatrix& a, const OperatorMatrix& b) {
  require_dim(state, a, "sym_covariance");
  require_dim(state, b, "sym_covariance");
  cplx ab = 0.0, ba = 0.0;
  if (state.is_pure()) {
    const CVector& v = state.vector();
    ab = v.dot(a.sparse() * (b.sparse() * v));
    ba = v.dot(b.sparse() * (a.sparse() * v));
  } else {
    ab = expectation(state, a * b);
    ba = expectation(state, b * a);
  }
  return (0.5 * (ab + ba) - expectation(state, a) * expectation(state, b)).real();
}

SpaceOperators operators_for(const SpaceDescriptor& space) {
  SpaceOperators out;
  out.space = space;
  switch (space.type) {
    case SpaceType::dicke: {
      auto c = build_collective_operators(DickeSpace(space.n_particles));
      out.s_plus = c.plus, out.s_minus = c.minus, out.s_z = c.z, out.s_x = c.x, out.s_y = c.y;
      break;
    }
    case SpaceType::full: {
      auto c = build_full_collective_operators(space.n_particles);
      out.s_plus = c.plus, out.s_minus = c.minus, out.s_z = c.z, out.s_x = c.x, out.s_y = c.y;
      break;
    }
    case SpaceType::dicke_fock: {
      auto c = build_collective_operators(DickeSpace(space.n_particles));
      auto f = build_fock_operators(FockSpace(std::max(1, space.n_max)));
      if (space.n_max < 1) throw std::invalid_argument("operators_for: dicke_fock requires n_max >= 1");
      const std::vector<int> dims{space.spin_dim(), space.field_dim()};
      out.s_plus = embed(c.plus, 0, dims);
      out.s_minus = embed(c.minus, 0, dims);
      out.s_z = embed(c.z, 0, dims);
      out.s_x = embed(c.x, 0, dims);
      out.s_y = embed(c.y, 0, dims);
      out.a = embed(f.a, 1, dims);
      out.a_dag = embed(f.a_dag, 1, dims);
      out.n = embed(f.n, 1, dims);
      break;
    }
    case SpaceType::fock: {
      auto f = build_fock_operators(FockSpace(space.n_max));
      out.a = f.a, out.a_dag = f.a_dag, out.n = f.n;
      break;
    }
  }
  return out;
}

void MomentSet::validate(double tol) const {
  if (expR < -1e-12) throw std::domain_error(fmt::format("moments: <R> = {} is negative", expR));
  if (expR2 < expR * expR - tol * std::max(1.0, expR2))
    throw std::domain_error(fmt::format("moments: <R^2> = {} below <R>^2 = {}", expR2, expR * expR));
  if (n_particles > 0 && std::abs(expSz) > 0.5 * n_particles + 1e-12)
    throw std::domain_error(fmt::format("moments: |<Sz>| = {} exceeds N/2", std::abs(expSz)));
}

MomentSet spin_moments(const CollectiveState& state) {
  if (!state.space().has_spin()) throw std::invalid_argument("spin_moments: state has no spin factor");
  const auto ops = operators_for(state.space());
  MomentSet m;
  m.n_particles = state.space().n_particles;
  if (state.is_pure()) {
    const CVector& v = state.vector();
    const CVector lowered = ops.s_minus.sparse() * v;
    const CVector r_v = ops.s_plus.sparse() * lowered;
    m.expR = lowered.squaredNorm();
    m.expR2 = r_v.squaredNorm();
    m.expSz = v.dot(ops.s_z.sparse() * v).real();
  } else {
    const OperatorMatrix r = ops.s_plus * ops.s_minus;
    m.expR = expectation(state, r).real();
    m.expR2 = expectation(state, r * r).real();
    m.expSz = expectation(state, ops.s_z).real();
  }
  return m;
}

BlochVector reduced_bloch_vector(const CollectiveState& state) {
  if (!state.space().has_spin()) throw std::invalid_argument("reduced_bloch_vector: no spin factor");
  const auto ops = operators_for(state.space());
  const double scale = 2.0 / state.space().n_particles;
  return {scale * expectation(state, ops.s_x).real(), scale * expectation(state, ops.s_y).real(),
          scale * expectation(state, ops.s_z).real()};
}

double purity_single_particle(const CollectiveState& state) {
  return 0.5 * (1.0 + reduced_bloch_vector(state).norm2());
}

std::vector<BlochVector> partial_trace_bloch_vectors(const CollectiveState& state, bool allow_large) {
  const auto& sp = state.space();
  const int n = sp.n_particles;
  if (sp.type == SpaceType::dicke) {
    if (n > kFullSpaceDefaultMaxN && !allow_large)
      throw std::length_error(fmt::format("partial trace path refused for N = {} > {}", n, kFullSpaceDefaultMaxN));
    if (state.is_pure())
      return partial_trace_bloch_vectors(
          CollectiveState::pure(SpaceDescriptor::full(n), symmetric_to_full(state.vector(), n), true),
          allow_large);
    throw std::invalid_argument("partial trace path: mixed symmetric states must be given on the full space");
  }
  if (sp.type != SpaceType::full) throw std::invalid_argument("partial trace path requires a full-space state");
  const int cap = allow_large ? kFullSpaceFlaggedMaxN : kFullSpaceDefaultMaxN;
  if (n > cap) throw std::length_error(fmt::format("partial trace path refused for N = {} > {}", n, cap));
  const int d = 1 << n;
  std::vector<BlochVector> out(n);
  for (int q = 0; q < n; ++q) {
    const int bit = 1 << (n - 1 - q);
    cplx r00 = 0.0, r11 = 0.0, r01 = 0.0;
    for (int idx = 0; idx < d; ++idx) {
      if (idx & bit) continue;
      const int jdx = idx | bit;
      if (state.is_pure()) {
        const CVector& v = state.vector();
        r00 += std::norm(v[idx]);
        r11 += std::norm(v[jdx]);
        r01 += v[idx] * std::conj(v[jdx]);
      } else {
        const CMatrix& r = state.matrix();
        r00 += r(idx, idx);
        r11 += r(jdx, jdx);
        r01 += r(idx, jdx);
      }
    }
    out[q] = {2.0 * r01.real(), 2.0 * r01.imag(), (r11 - r00).real()};
  }
  return out;
}

std::vector<double> partial_trace_purities(const CollectiveState& state, bool allow_large) {
  std::vector<double> out;
  for (const auto& v : partial_trace_bloch_vectors(state, allow_large)) out.push_back(0.5 * (1.0 + v.norm2()));
  return out;
}

CollectiveState random_state(RandomStateKind kind, int n_particles, std::uint64_t seed, bool allow_large) {
  SpaceDescriptor space;
  if (kind == RandomStateKind::symmetric) {
    DickeSpace check(n_particles);
    space = SpaceDescriptor::dicke(n_particles);
  } else {
    const int cap = allow_large ? kFullSpaceFlaggedMaxN : kFullSpaceDefaultMaxN;
    if (n_particles < 1 || n_particles > cap)
      throw std::length_error(fmt::format(
          "random_state: full space with N = {} needs N <= {}{}", n_particles, cap,
          allow_large ? "" : " (pass the large-memory flag to allow up to 16)"));
    space = SpaceDescriptor::full(n_particles);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector v(space.dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v[i] = cplx(re, im);
  }
  return CollectiveState::pure(space, std::move(v), true);
}

}  // namespace superwit
