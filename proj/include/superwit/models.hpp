#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "superwit/criteria.hpp"
#include "superwit/hilbert.hpp"

namespace superwit::models {

// ---------------------------------------------------------------------------
// Dicke model  H = w_eg Sz + w_a a^+a + g/sqrt(N) (S+ + S-)(a^+ + a)

struct DickeParams {
  int n_particles = 16;
  double omega_eg = 1.0;
  double omega_a = 1.0;
  double g = 0.0;
  int n_max = 40;           // initial cutoff; raised until the tail is small
  int n_max_ceiling = 600;
  double tail_tolerance = 1e-8;

  double g_c() const;
  void validate() const;
};

enum class EigenMethod { automatic, dense, lanczos };

struct DickeGroundState {
  CollectiveState state;
  double energy = 0.0;
  double n_per_N = 0.0;  // <a^+ a> / N
  double expSz = 0.0;
  int n_max = 0;
  double fock_tail = 0.0;
  std::string method;
};

/// Sparse Hamiltonian on the full joint space (spin-major ordering).
OperatorMatrix dicke_hamiltonian(const DickeParams& p, int n_max);

/// Lowest eigenpair in the even-parity sector, exp(i pi (Sz + S + a^+a)) = +1, which
/// contains the ground state for all g and keeps <a> = <Sx> = 0 exactly.
DickeGroundState dicke_ground_state(const DickeParams& p, EigenMethod method = EigenMethod::automatic);

/// Lowest eigenpair of a sparse Hermitian matrix by Lanczos with full
/// reorthogonalisation and explicit restarts.
struct EigenPair {
  double value = 0.0;
  CVector vector;
  int iterations = 0;
  bool converged = false;
};
EigenPair lanczos_lowest(const SparseC& h, double tol = 1e-11, int krylov_dim = 120, int max_restarts = 200,
                         std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// BEC two-mode model  H = w_exc Sz + U Sz^2

struct BECParams {
  int n_particles = 16;
  double omega_exc = 1.0;
  double u_int = 0.0;  // coefficient of Sz^2
};

struct BECGroundState {
  CollectiveState state;
  double m_star = 0.0;
  bool tie = false;
};

/// Ground state |S, m*> with m* = argmin (w m + U m^2); ties go to the smaller m.
BECGroundState bec_ground_state(const BECParams& p);

// ---------------------------------------------------------------------------
// Single-photon superradiance

using Position = std::array<double, 3>;

struct SuperradianceParams {
  int n_particles = 200;
  double radius = 5.0;  // in units of the wavelength
  double wavelength = 1.0;
  double gamma = 1.0;
  bool lamb_shift = false;
  std::uint64_t seed = 1;
  std::vector<double> t_grid;

  double k0() const;
};

/// Amplitudes beta_j of |g..e_j..g>|0> and one collective photon amplitude.
struct SingleExcitationState {
  CVector beta;
  cplx gamma_ph = 0.0;
  std::vector<Position> positions;
  double k0 = 0.0;  // wavevector along +z

  int size() const { return static_cast<int>(beta.size()); }
  double atomic_population() const { return beta.squaredNorm(); }
  /// e^{i k0 z_j}
  CVector timed_dicke_phases() const;
  std::vector<double> phase_angles() const;
};

/// N points uniform in a ball of radius R * wavelength.
std::vector<Position> sample_positions(const SuperradianceParams& p);

/// beta_j = e^{i k0 z_j} / sqrt(N), no photon.
SingleExcitationState timed_dicke_initial(const std::vector<Position>& positions, double k0);

/// d beta / dt = -M beta, M_jl = (gamma/2)[sin(k r)/(k r) + i lamb cos(k r)/(k r)], M_jj = gamma/2.
/// Coincident pairs take the j = l value.
CMatrix decay_kernel(const std::vector<Position>& positions, double gamma, double k0, bool lamb_shift);

struct Trajectory {
  std::vector<double> t;
  std::vector<SingleExcitationState> states;
  std::string method;
};

/// Evolves beta on the time grid. The photon amplitude carries the lost norm, with
/// the phase of <TD | beta(0) - beta(t)>.
Trajectory evolve(const CMatrix& m, const SingleExcitationState& initial, const std::vector<double>& t_grid);

struct SingleExcitationMoments {
  MomentSet spin;
  criteria::JointMoments joint;
};

/// Closed-form moments; phased uses S- = sum_j e^{-i k0 z_j} s-_j.
SingleExcitationMoments single_excitation_moments(const SingleExcitationState& s, bool phased);
/// Brute-force reference on the 2^N (x) {0,1,2} photon space (N <= 10).
SingleExcitationMoments single_excitation_oracle(const SingleExcitationState& s, bool phased);

}  // namespace superwit::models
