#pragma once

// Separable-state bound on the variance of R = S+ S-.
//
// For target moments (r, s) the bound is
//
//     eta(r, s) = min { <(R - r)^2>_sigma : sigma separable, <Sz>_sigma = s }.
//
// Any separable state with <R> = r and <Sz> = s has Var(R) = <(R - r)^2> >= eta,
// so Var(R) - eta < 0 certifies entanglement. The objective is linear in sigma
// and there is a single linear constraint, so the minimum is attained on a
// mixture of at most two pure product states. It equals
//     sum_k P_k Var_k(R) + sum_k P_k (<R>_k - r)^2
// for a mixture with weights P_k.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "superwit/hilbert.hpp"

namespace superwit::separable {

/// Pure product state of N qubits,
/// |psi_j> = cos(theta_j/2)|e> + exp(i phi_j) sin(theta_j/2)|g>.
/// Optional phase tags chi_j select the phased collective operators
/// S_- = sum_j exp(-i chi_j) s_-^(j).
struct ProductState {
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<double> phase;  // empty: unphased

  int size() const { return static_cast<int>(theta.size()); }
  bool phased() const { return !phase.empty(); }
  /// Throws std::invalid_argument on length mismatch or angles out of range.
  void validate() const;

  static ProductState uniform(int n, double theta, double phi = 0.0);
  /// First k qubits excited, the rest in the ground state.
  static ProductState k_excited(int n, int k);
};

/// Wrap arbitrary real angles into theta in [0, pi], phi in [0, 2 pi).
ProductState canonical(ProductState p);

struct ProductMoments {
  double expR = 0.0;
  double expR2 = 0.0;
  double expSz = 0.0;
  double varR() const { return expR2 - expR * expR; }
};

/// Exact moments in O(N).
ProductMoments product_moments(const ProductState& p);

/// Moments and their gradients with respect to (theta_1..theta_N, phi_1..phi_N).
struct ProductMomentGradients {
  ProductMoments value;
  std::vector<double> dR, dR2, dSz;  // each of length 2N
};
ProductMomentGradients product_moments_with_gradient(const ProductState& p);

/// Brute-force 2^N reference (N <= 10).
ProductMoments statevector_oracle(const ProductState& p);
/// Full-space amplitudes of a product state (N <= 16).
CVector product_statevector(const ProductState& p);

struct SeparableMixture {
  std::vector<ProductState> components;
  std::vector<double> weights;

  void validate() const;
  ProductMoments moments() const;
  /// <(R - r)^2> of the mixture.
  double second_moment_about(double r) const;
  CMatrix density_matrix() const;  // N <= 10
};

struct EtaQuery {
  int n_particles = 0;
  double target_expR = 0.0;
  double target_expSz = 0.0;
  double tolerance = 1e-6;  // constraint residual per particle
  bool phased = false;
  bool mean_constrained = false;  // also pin <R> = r (see eta_mean_constrained)

  /// Feasibility pre-pass. Throws std::domain_error if no separable state reaches <Sz> = s
  /// or r lies outside the spectrum of R.
  void validate() const;
};

struct OptimizerConfig {
  int starts = 32;
  int components = 2;  // 1..3
  std::uint64_t seed = 20170311;
  int threads = 1;
  int max_iterations = 400;
  double gap_tolerance = 1e-6;  // relative agreement between best and runner-up start
  bool lagrangian_refinement = true;

  nlohmann::json to_json() const;
};

enum class BoundStatus { converged, inconclusive };
std::string to_string(BoundStatus s);

struct EtaDiagnostics {
  BoundStatus status = BoundStatus::inconclusive;
  std::string method;
  int starts = 0;
  int agreeing_starts = 0;  // primal starts within gap_tolerance of the best
  int dual_agreeing = 0;    // inner searches at the final multiplier reaching its minimum
  double best = 0.0;
  double second_best = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  double multiplier = 0.0;
  double constraint_residual = 0.0;
  long evaluations = 0;
  std::vector<double> start_values;  // per start, after exact weight polish
  SeparableMixture argmin;

  nlohmann::json to_json() const;
};

struct EtaResult {
  double eta = 0.0;
  EtaDiagnostics diagnostics;
};

EtaResult eta_lower_bound(const EtaQuery& query, const OptimizerConfig& config = {});

/// Minimum of <(R - r)^2> over pure product states alone, with <Sz> = s enforced
/// by penalty only (used to check that mixing never hurts).
EtaResult eta_pure_products(const EtaQuery& query, const OptimizerConfig& config = {});

/// min Var(R) over separable states with <R> = r and <Sz> = s, from the bound above by
/// the concave scan  max_r' [eta(r', s) - (r' - r)^2]. Always >= eta_lower_bound; each
/// step is a full solve, so this costs ~`steps` times as much.
EtaResult eta_mean_constrained(const EtaQuery& query, const OptimizerConfig& config = {}, int steps = 30);

// ---------------------------------------------------------------------------
// Sampling

struct SeparableSample {
  ProductMoments moments;  // mixture moments
  double varR = 0.0;
  int components = 0;
};

/// Random separable mixtures: 2-4 components, Dirichlet(1) weights. Components are
/// either independent uniform Bloch directions or clustered around a random
/// direction. Deterministic under the seed.
class SeparableSampler {
public:
  SeparableSampler(int n_particles, std::uint64_t seed, int min_components = 2, int max_components = 4);

  SeparableMixture next_mixture();
  SeparableSample next();

  int particles() const { return n_; }

private:
  int n_;
  int min_c_, max_c_;
  std::uint64_t state_;
  ProductState random_product();
  double uniform();
};

std::vector<SeparableSample> separable_sampler(int n_particles, long count, std::uint64_t seed);

/// Lower convex envelope of {(<Sz>_k, <(R - r)^2>_k)} over the samples, evaluated at s.
/// Mixtures of the sampled separable states realize every point on it, so it is an
/// upper bound on eta(r, s). Returns nullopt when s lies outside the sampled range.
std::optional<double> sampled_envelope(const std::vector<SeparableSample>& samples, double r, double s);

// ---------------------------------------------------------------------------
// Cache

/// JSON cache of eta values keyed by (N, r, s, phased, tolerance) rounded to 1e-9.
class EtaCache {
public:
  EtaCache() = default;
  explicit EtaCache(std::filesystem::path file);

  std::optional<EtaResult> lookup(const EtaQuery& q) const;
  void store(const EtaQuery& q, const EtaResult& r);
  /// Returns the cached value or computes and stores it.
  EtaResult get_or_compute(const EtaQuery& q, const OptimizerConfig& cfg);

  void save() const;
  std::size_t size() const;
  static std::string key(const EtaQuery& q);

private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::map<std::string, nlohmann::json> entries_;
};

}  // namespace superwit::separable
