#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

#include "superwit/hilbert.hpp"

namespace superwit {

DickeSpace::DickeSpace(int n_particles) : n_(n_particles) {
  if (n_particles < 1) throw std::invalid_argument("DickeSpace: particle count must be >= 1");
  if (n_particles > kMaxDickeN)
    throw std::length_error(
        fmt::format("DickeSpace: N = {} exceeds the configured maximum {}", n_particles, kMaxDickeN));
}

int DickeSpace::index_of(double m) const {
  const double shifted = m + spin();
  const long idx = std::lround(shifted);
  if (std::abs(shifted - static_cast<double>(idx)) > 1e-9 || idx < 0 || idx > n_)
    throw std::out_of_range(fmt::format("DickeSpace: m = {} not in basis of N = {}", m, n_));
  return static_cast<int>(idx);
}

FockSpace::FockSpace(int n_max) : n_max_(n_max) {
  if (n_max < 0) throw std::invalid_argument("FockSpace: n_max must be >= 0");
}

OperatorMatrix::OperatorMatrix(SparseC m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("OperatorMatrix: matrix must be square");
  m_.makeCompressed();
}

OperatorMatrix OperatorMatrix::identity(int dim) {
  SparseC m(dim, dim);
  m.setIdentity();
  return OperatorMatrix(std::move(m));
}

OperatorMatrix OperatorMatrix::diagonal(const Eigen::VectorXd& d) {
  const auto n = d.size();
  SparseC m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i)
    if (d[i] != 0.0) m.insert(i, i) = d[i];
  return OperatorMatrix(std::move(m));
}

OperatorMatrix OperatorMatrix::from_dense(const CMatrix& d, double drop_tol) {
  if (d.rows() != d.cols()) throw std::invalid_argument("OperatorMatrix: matrix must be square");
  return OperatorMatrix(SparseC(d.sparseView(1.0, drop_tol)));
}

OperatorMatrix OperatorMatrix::adjoint() const { return OperatorMatrix(SparseC(m_.adjoint())); }

bool OperatorMatrix::is_hermitian(double tol) const { return max_abs_diff(*this, adjoint()) <= tol; }

double OperatorMatrix::max_abs() const {
  double mx = 0.0;
  for (int k = 0; k < m_.outerSize(); ++k)
    for (SparseC::InnerIterator it(m_, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
  return mx;
}

static void require_same_dim(const OperatorMatrix& a, const OperatorMatrix& b, const char* what) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(fmt::format("{}: dimension mismatch ({} vs {})", what, a.dim(), b.dim()));
}

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& o) {
  require_same_dim(*this, o, "operator+");
  m_ = m_ + o.m_;
  m_.makeCompressed();
  return *this;
}

OperatorMatrix& OperatorMatrix::operator-=(const OperatorMatrix& o) {
  require_same_dim(*this, o, "operator-");
  m_ = m_ - o.m_;
  m_.makeCompressed();
  return *this;
}

OperatorMatrix& OperatorMatrix::operator*=(cplx s) {
  m_ *= s;
  return *this;
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b, "operator*");
  SparseC p = (a.m_ * b.m_).pruned();
  return OperatorMatrix(std::move(p));
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) { return a * b - b * a; }

double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b, "max_abs_diff");
  return (a - b).max_abs();
}

CollectiveOperators build_collective_operators(const DickeSpace& space) {
  const int d = space.dim();
  const double s = space.spin();
  std::vector<Eigen::Triplet<cplx>> up;
  up.reserve(d);
  Eigen::VectorXd mz(d);
  for (int i = 0; i < d; ++i) {
    const double m = space.m_of(i);
    mz[i] = m;
    if (i + 1 < d) up.emplace_back(i + 1, i, std::sqrt(s * (s + 1.0) - m * (m + 1.0)));
  }
  SparseC sp(d, d);
  sp.setFromTriplets(up.begin(), up.end());
  OperatorMatrix plus(std::move(sp));
  OperatorMatrix minus = plus.adjoint();
  OperatorMatrix x = (plus + minus) * cplx(0.5, 0.0);
  OperatorMatrix y = (plus - minus) * cplx(0.0, -0.5);
  return {std::move(plus), std::move(minus), OperatorMatrix::diagonal(mz), std::move(x), std::move(y)};
}

FockOperators build_fock_operators(const FockSpace& space) {
  if (space.cutoff() < 1) throw std::invalid_argument("build_fock_operators: n_max must be >= 1");
  const int d = space.dim();
  std::vector<Eigen::Triplet<cplx>> t;
  Eigen::VectorXd nd(d);
  for (int n = 0; n < d; ++n) {
    nd[n] = n;
    if (n >= 1) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  }
  SparseC a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  OperatorMatrix am(std::move(a));
  OperatorMatrix ad = am.adjoint();
  return {std::move(am), std::move(ad), OperatorMatrix::diagonal(nd)};
}

OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b) {
  const SparseC& A = a.sparse();
  const SparseC& B = b.sparse();
  const int da = a.dim(), db = b.dim();
  const long long total = static_cast<long long>(da) * db;
  if (total > std::numeric_limits<int>::max()) throw std::length_error("tensor: dimension overflow");
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros()) * static_cast<std::size_t>(B.nonZeros()));
  for (int i = 0; i < A.outerSize(); ++i)
    for (SparseC::InnerIterator ia(A, i); ia; ++ia)
      for (int k = 0; k < B.outerSize(); ++k)
        for (SparseC::InnerIterator ib(B, k); ib; ++ib)
          t.emplace_back(static_cast<int>(ia.row() * db + ib.row()),
                         static_cast<int>(ia.col() * db + ib.col()), ia.value() * ib.value());
  SparseC m(da * db, da * db);
  m.setFromTriplets(t.begin(), t.end());
  return OperatorMatrix(std::move(m));
}

OperatorMatrix embed(const OperatorMatrix& a, std::size_t position, std::span<const int> dims) {
  if (position >= dims.size()) throw std::invalid_argument("embed: position out of range");
  if (dims[position] != a.dim())
    throw std::invalid_argument(
        fmt::format("embed: factor has dim {} but slot {} has dim {}", a.dim(), position, dims[position]));
  int before = 1, after = 1;
  for (std::size_t i = 0; i < position; ++i) before *= dims[i];
  for (std::size_t i = position + 1; i < dims.size(); ++i) after *= dims[i];
  OperatorMatrix out = a;
  if (before > 1) out = tensor(OperatorMatrix::identity(before), out);
  if (after > 1) out = tensor(out, OperatorMatrix::identity(after));
  return out;
}

CollectiveOperators build_full_collective_operators(int n_particles, std::span<const double> phases) {
  if (n_particles < 1) throw std::invalid_argument("full space: N must be >= 1");
  if (n_particles > kFullSpaceFlaggedMaxN)
    throw std::length_error(fmt::format("full space: N = {} exceeds hard cap {}", n_particles,
                                        kFullSpaceFlaggedMaxN));
  if (!phases.empty() && static_cast<int>(phases.size()) != n_particles)
    throw std::invalid_argument("full space: phase tags must have length N");
  const int d = 1 << n_particles;
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(d) * n_particles / 2);
  Eigen::VectorXd zd(d);
  for (int idx = 0; idx < d; ++idx) {
    zd[idx] = std::popcount(static_cast<unsigned>(idx)) - 0.5 * n_particles;
    for (int q = 0; q < n_particles; ++q) {
      const int bit = 1 << (n_particles - 1 - q);
      if (idx & bit) {
        const cplx ph = phases.empty() ? cplx(1.0) : std::polar(1.0, -phases[q]);
        t.emplace_back(idx ^ bit, idx, ph);
      }
    }
  }
  SparseC sm(d, d);
  sm.setFromTriplets(t.begin(), t.end());
  OperatorMatrix minus(std::move(sm));
  OperatorMatrix plus = minus.adjoint();
  OperatorMatrix x = (plus + minus) * cplx(0.5, 0.0);
  OperatorMatrix y = (plus - minus) * cplx(0.0, -0.5);
  return {std::move(plus), std::move(minus), OperatorMatrix::diagonal(zd), std::move(x), std::move(y)};
}

}  // namespace superwit
