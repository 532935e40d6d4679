#pragma once

// Exact finite-dimensional collective-spin and bosonic-mode spaces.
//
// Basis conventions (fixed, tagged on every serialized state as
// "m_asc_n_asc_spin_major"):
//   * Dicke space of N two-level particles, S = N/2: index i <-> m = -S + i.
//   * Fock space with cutoff n_max: index n = 0 ... n_max.
//   * Joint spin (x) field space: index = i * (n_max + 1) + n.
//   * Full 2^N space: qubit 0 is the most significant bit, bit value 1 = excited.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace superwit {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr const char* kOrderingTag = "m_asc_n_asc_spin_major";

/// Largest particle number accepted for Dicke-space operator construction.
inline constexpr int kMaxDickeN = 100000;
/// Default and flagged caps for the full 2^N backend.
inline constexpr int kFullSpaceDefaultMaxN = 12;
inline constexpr int kFullSpaceFlaggedMaxN = 16;

class DickeSpace {
public:
  explicit DickeSpace(int n_particles);

  int particles() const { return n_; }
  double spin() const { return 0.5 * n_; }
  int dim() const { return n_ + 1; }
  double m_of(int index) const { return -spin() + index; }
  int index_of(double m) const;

private:
  int n_;
};

class FockSpace {
public:
  explicit FockSpace(int n_max);

  int cutoff() const { return n_max_; }
  int dim() const { return n_max_ + 1; }

private:
  int n_max_;
};

class OperatorMatrix {
public:
  OperatorMatrix() = default;
  explicit OperatorMatrix(SparseC m);

  static OperatorMatrix identity(int dim);
  static OperatorMatrix diagonal(const Eigen::VectorXd& d);
  static OperatorMatrix from_dense(const CMatrix& m, double drop_tol = 0.0);

  int dim() const { return static_cast<int>(m_.rows()); }
  const SparseC& sparse() const { return m_; }
  CMatrix dense() const { return CMatrix(m_); }
  cplx element(int row, int col) const { return m_.coeff(row, col); }

  OperatorMatrix adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;
  /// Largest absolute entry.
  double max_abs() const;

  CVector apply(const CVector& v) const { return m_ * v; }

  OperatorMatrix& operator+=(const OperatorMatrix& o);
  OperatorMatrix& operator-=(const OperatorMatrix& o);
  OperatorMatrix& operator*=(cplx s);

  friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
  friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
  friend OperatorMatrix operator*(OperatorMatrix a, cplx s) { return a *= s; }
  friend OperatorMatrix operator*(cplx s, OperatorMatrix a) { return a *= s; }
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);

private:
  SparseC m_;
};

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);
/// Symmetric max-norm distance between two operators of equal dimension.
double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b);

struct CollectiveOperators {
  OperatorMatrix plus, minus, z, x, y;
};

struct FockOperators {
  OperatorMatrix a, a_dag, n;
};

CollectiveOperators build_collective_operators(const DickeSpace& space);
FockOperators build_fock_operators(const FockSpace& space);

/// Kronecker product, first factor major.
OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b);
/// Lift a factor operator into a tensor product of spaces with identities elsewhere.
OperatorMatrix embed(const OperatorMatrix& a, std::size_t position, std::span<const int> dims);

// ---------------------------------------------------------------------------
// States

enum class SpaceType { dicke, dicke_fock, full, fock };

struct SpaceDescriptor {
  SpaceType type = SpaceType::dicke;
  int n_particles = 0;  // unused for fock
  int n_max = -1;       // only dicke_fock and fock

  int dim() const;
  int spin_dim() const;   // dimension of the spin factor (1 for fock)
  int field_dim() const;  // dimension of the field factor (1 if none)
  bool has_spin() const { return type != SpaceType::fock; }
  bool has_field() const { return type == SpaceType::dicke_fock || type == SpaceType::fock; }

  static SpaceDescriptor dicke(int n) { return {SpaceType::dicke, n, -1}; }
  static SpaceDescriptor dicke_fock(int n, int n_max) { return {SpaceType::dicke_fock, n, n_max}; }
  static SpaceDescriptor full(int n) { return {SpaceType::full, n, -1}; }
  static SpaceDescriptor fock(int n_max) { return {SpaceType::fock, 0, n_max}; }

  friend bool operator==(const SpaceDescriptor&, const SpaceDescriptor&) = default;
};

std::string to_string(SpaceType t);
std::optional<SpaceType> space_type_from_string(const std::string& s);

/// Pure state vector or density matrix on a SpaceDescriptor. Immutable.
class CollectiveState {
public:
  /// Validates norm 1 (within tol) unless normalize is set.
  static CollectiveState pure(SpaceDescriptor space, CVector amplitudes, bool normalize = false,
                              double tol = 1e-10);
  /// Validates Hermitian, unit trace, and eigenvalues >= -tol.
  static CollectiveState density(SpaceDescriptor space, CMatrix rho, double tol = 1e-10);

  const SpaceDescriptor& space() const { return space_; }
  int dim() const { return space_.dim(); }
  bool is_pure() const { return std::holds_alternative<CVector>(data_); }
  const CVector& vector() const;
  const CMatrix& matrix() const;
  CMatrix density_matrix() const;

  /// Population in the highest Fock level (0 without a field factor).
  double fock_tail() const;
  /// Reduced spin density matrix (trace over the field).
  CMatrix reduced_spin() const;
  /// Reduced field density matrix (trace over the spin).
  CMatrix reduced_field() const;

private:
  CollectiveState(SpaceDescriptor s, std::variant<CVector, CMatrix> d)
      : space_(s), data_(std::move(d)) {}
  SpaceDescriptor space_;
  std::variant<CVector, CMatrix> data_;
};

/// Dicke state |S, m> on the symmetric space.
CollectiveState dicke_state(int n_particles, double m);
/// Dicke state |S,m> (x) |n> on the joint space.
CollectiveState dicke_fock_product(const CVector& spin, const CVector& field, int n_particles,
                                   int n_max);
/// Embed the symmetric-space amplitudes into the full 2^N space.
CVector symmetric_to_full(const CVector& dicke_amplitudes, int n_particles);

// ---------------------------------------------------------------------------
// Expectation values

cplx expectation(const CollectiveState& state, const OperatorMatrix& op);
/// Requires a Hermitian operator. Tiny negative round-off (>= -1e-10) is clamped to 0.
double variance(const CollectiveState& state, const OperatorMatrix& op);
/// 1/2 <AB + BA> - <A><B> (real part).
double sym_covariance(const CollectiveState& state, const OperatorMatrix& a,
                      const OperatorMatrix& b);

/// Collective spin operators lifted onto the state's space (spin factor of
/// dicke_fock, or sums of single-qubit operators on the full space).
struct SpaceOperators {
  SpaceDescriptor space;
  OperatorMatrix s_plus, s_minus, s_z, s_x, s_y;
  OperatorMatrix a, a_dag, n;  // empty unless the space carries a field
};
SpaceOperators operators_for(const SpaceDescriptor& space);

/// Full-space collective operators with optional per-qubit phase tags
/// S_- = sum_j exp(-i chi_j) s_-^(j).
CollectiveOperators build_full_collective_operators(int n_particles,
                                                    std::span<const double> phases = {});

struct MomentSet {
  int n_particles = 0;
  double expR = 0.0;   // <S+ S->
  double expR2 = 0.0;  // <(S+ S-)^2>
  double expSz = 0.0;
  double varR() const { return expR2 - expR * expR; }
  /// Throws std::domain_error on violated invariants.
  void validate(double tol = 1e-9) const;
};

MomentSet spin_moments(const CollectiveState& state);

struct BlochVector {
  double x = 0.0, y = 0.0, z = 0.0;
  double norm2() const { return x * x + y * y + z * z; }
};

/// Symmetric path: v = 2 <S> / N. Works for dicke, dicke_fock and full states.
BlochVector reduced_bloch_vector(const CollectiveState& state);
/// Single-particle purity Tr rho_1^2 of the symmetric reduced state, (1 + |v|^2) / 2.
double purity_single_particle(const CollectiveState& state);
/// Per-particle reduced Bloch vectors by explicit partial trace (full space, N <= 12 or 16).
std::vector<BlochVector> partial_trace_bloch_vectors(const CollectiveState& state,
                                                     bool allow_large = false);
std::vector<double> partial_trace_purities(const CollectiveState& state, bool allow_large = false);

enum class RandomStateKind { symmetric, full };

/// Haar-uniform pure state; deterministic given the seed.
CollectiveState random_state(RandomStateKind kind, int n_particles, std::uint64_t seed,
                             bool allow_large = false);

}  // namespace superwit
