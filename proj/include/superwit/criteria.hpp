#pragma once

// Entanglement and nonclassicality witnesses. Every witness returns a
// WitnessReport whose `terms` add up to `value`; a negative value beyond the
// detection tolerance certifies entanglement (or nonclassicality for the
// single-mode criteria).

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "superwit/hilbert.hpp"
#include "superwit/separable.hpp"

namespace superwit::criteria {

enum class Verdict { entangled, undetected, inconclusive, invalid };
std::string to_string(Verdict v);

struct WitnessReport {
  std::string name;
  double value = 0.0;
  Verdict verdict = Verdict::undetected;
  std::vector<std::pair<std::string, double>> terms;  // additive: sum == value
  std::optional<MomentSet> moments;
  nlohmann::json details = nlohmann::json::object();  // non-additive intermediate quantities
  nlohmann::json diagnostics = nlohmann::json::object();
  std::string reason;

  double term_sum() const;
  double term(const std::string& key) const;
  bool detected() const { return verdict == Verdict::entangled; }
  nlohmann::json to_json() const;
};

enum class SingleModeVariant { as_printed, central_moment };
std::string to_string(SingleModeVariant v);
std::optional<SingleModeVariant> single_mode_variant_from_string(const std::string& s);

struct WitnessConfig {
  double detection_tolerance = 1e-6;
  double fock_tail_tolerance = 1e-8;
  separable::OptimizerConfig eta;
  separable::EtaCache* eta_cache = nullptr;  // optional, not owned
  bool phased = false;                       // eta query flag for phased collective operators
  bool mean_constrained_eta = false;         // pin <R> as well (slower, tighter bound)
  SingleModeVariant single_mode_variant = SingleModeVariant::central_moment;
  int theta_scan = 180;
  bool hz_alternate_pairing = false;

  nlohmann::json to_json() const;
};

/// entangled iff value < -tol; never issued inside the tolerance band.
Verdict verdict_for(double value, double tol);

// ---------------------------------------------------------------------------
// Many-particle witnesses

/// Var(R) - eta(<R>, <Sz>) for R = S+ S-.
WitnessReport xi_new(const CollectiveState& state, const WitnessConfig& cfg = {});
/// Same, from precomputed moments (e.g. closed-form single-excitation moments).
WitnessReport xi_new(const MomentSet& moments, const WitnessConfig& cfg = {});

/// Q = 2 (1 - (1/N) sum_i Tr rho_i^2). Symmetric states use Q = 1 - |v|^2; full-space
/// states use the explicit partial traces.
double linear_entropy_Q(const CollectiveState& state);

/// Spin squeezing parameter N min_{n perp <S>} Var(S_n) / |<S>|^2 - 1.
WitnessReport xi_spin(const CollectiveState& state, const WitnessConfig& cfg = {});

// ---------------------------------------------------------------------------
// Single mode

/// min over theta of Var(n) - <n> - (Im{<b_th^+2> - c_th})^2 with b_th = b e^{i theta},
/// c_th = <b_th>^2 (as printed) or <b_th^+>^2 (central moment). Input: Fock-space state.
WitnessReport single_mode_witness(const CollectiveState& field, SingleModeVariant variant, int theta_scan,
                                  const WitnessConfig& cfg = {});
WitnessReport single_mode_witness(const CollectiveState& field, const WitnessConfig& cfg = {});

/// Var(a^+ a) - <a^+ a> of the field (reduced state for joint inputs).
double mandel_q_field(const CollectiveState& state);

// ---------------------------------------------------------------------------
// Ensemble-field witnesses

/// Joint spin-field moments entering the ensemble-field witnesses, with
/// H1 = S+ a + S- a^+ and H2 = i (S+ a - S- a^+).
struct JointMoments {
  double expSz = 0.0;
  double expH1 = 0.0, expH2 = 0.0;
  double expH1sq = 0.0, expH2sq = 0.0;
  double symH1H2 = 0.0;  // 1/2 <H1 H2 + H2 H1>
  cplx cross;            // <-S+ S- + 2 Sz a a^+>
  double expRn = 0.0;    // <S+ S- a^+ a>
  cplx expSmAdag;        // <S- a^+>
  cplx expSmA;           // <S- a>
  double fock_tail = 0.0;

  double varH1() const { return expH1sq - expH1 * expH1; }
  double varH2() const { return expH2sq - expH2 * expH2; }
  double covH1H2() const { return symH1H2 - expH1 * expH2; }
};

JointMoments joint_moments(const CollectiveState& joint);

WitnessReport mu_SR(const CollectiveState& joint, const WitnessConfig& cfg = {});
WitnessReport mu_SR(const JointMoments& m, const WitnessConfig& cfg = {});
WitnessReport mu_HZ(const CollectiveState& joint, const WitnessConfig& cfg = {});
WitnessReport mu_HZ(const JointMoments& m, const WitnessConfig& cfg = {});
WitnessReport mu_spin(const CollectiveState& joint, const WitnessConfig& cfg = {});

// ---------------------------------------------------------------------------
// Atomic field correlations

enum class ModeKind { plane_wave, standing_wave };

/// Ground and excited mode functions: u_e = e^{i k.r} u_g (plane wave) or
/// u_e = sqrt(2) cos(k x) u_g (standing wave). Both normalised over the volume.
struct ModePair {
  ModeKind kind = ModeKind::plane_wave;
  double volume = 1.0;
};

/// Spatially averaged g^(k) of psi(r) = u_g c_g + u_e c_e under the Schwinger
/// mapping S+ = c_e^+ c_g. Order 1..4.
double gn_wavefunction(const CollectiveState& state, const ModePair& modes, int order);

}  // namespace superwit::criteria
