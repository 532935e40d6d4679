#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include "superwit/criteria.hpp"
#include "superwit/log.hpp"

namespace superwit::criteria {

namespace {

constexpr double kPi = std::numbers::pi;

WitnessReport make_report(std::string name, std::vector<std::pair<std::string, double>> terms,
                          const WitnessConfig& cfg) {
  WitnessReport r;
  r.name = std::move(name);
  r.terms = std::move(terms);
  r.value = r.term_sum();
  r.verdict = verdict_for(r.value, cfg.detection_tolerance);
  return r;
}

WitnessReport undetected_with_reason(std::string name, std::string reason) {
  WitnessReport r;
  r.name = std::move(name);
  r.verdict = Verdict::undetected;
  r.reason = std::move(reason);
  r.value = std::numeric_limits<double>::quiet_NaN();
  return r;
}

// Field truncation check shared by the joint witnesses.
void apply_tail_check(WitnessReport& r, double tail, const WitnessConfig& cfg) {
  r.details["fock_tail"] = tail;
  if (tail > cfg.fock_tail_tolerance) {
    r.verdict = Verdict::invalid;
    r.reason = fmt::format("Fock truncation inadequate: tail population {:.3g} > {:.3g}", tail,
                           cfg.fock_tail_tolerance);
  }
}

CMatrix field_density(const CollectiveState& s, double* tail) {
  CMatrix rho;
  if (s.space().type == SpaceType::fock) {
    rho = s.density_matrix();
  } else if (s.space().has_field()) {
    rho = s.reduced_field();
  } else {
    throw std::invalid_argument("state has no field factor");
  }
  if (tail) *tail = rho(rho.rows() - 1, rho.rows() - 1).real();
  return rho;
}

OperatorMatrix combo(const SpaceOperators& ops, double x, double y, double z) {
  return ops.s_x * cplx(x) + ops.s_y * cplx(y) + ops.s_z * cplx(z);
}

double falling(double x, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= (x - i);
  return r;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::entangled: return "entangled";
    case Verdict::undetected: return "undetected";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::invalid: return "invalid";
  }
  return "?";
}

std::string to_string(SingleModeVariant v) { return v == SingleModeVariant::as_printed ? "as_printed" : "central_moment"; }

std::optional<SingleModeVariant> single_mode_variant_from_string(const std::string& s) {
  if (s == "as_printed") return SingleModeVariant::as_printed;
  if (s == "central_moment") return SingleModeVariant::central_moment;
  return std::nullopt;
}

Verdict verdict_for(double value, double tol) {
  return value < -tol ? Verdict::entangled : Verdict::undetected;
}

double WitnessReport::term_sum() const {
  double s = 0.0;
  for (const auto& [k, v] : terms) s += v;
  return s;
}

double WitnessReport::term(const std::string& key) const {
  for (const auto& [k, v] : terms)
    if (k == key) return v;
  throw std::out_of_range("WitnessReport: no term '" + key + "'");
}

nlohmann::json WitnessReport::to_json() const {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [k, v] : terms) t[k] = v;
  nlohmann::json j{{"name", name},
                   {"value", std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(nullptr)},
                   {"verdict", to_string(verdict)},
                   {"terms", t},
                   {"details", details},
                   {"diagnostics", diagnostics}};
  if (!reason.empty()) j["reason"] = reason;
  if (moments)
    j["moments"] = {{"N", moments->n_particles},
                    {"expR", moments->expR},
                    {"expR2", moments->expR2},
                    {"expSz", moments->expSz},
                    {"varR", moments->varR()}};
  return j;
}

nlohmann::json WitnessConfig::to_json() const {
  return {{"detection_tolerance", detection_tolerance},
          {"fock_tail_tolerance", fock_tail_tolerance},
          {"phased", phased},
          {"mean_constrained_eta", mean_constrained_eta},
          {"single_mode_variant", to_string(single_mode_variant)},
          {"theta_scan", theta_scan},
          {"hz_alternate_pairing", hz_alternate_pairing},
          {"eta", eta.to_json()}};
}

// ---------------------------------------------------------------------------

WitnessReport xi_new(const MomentSet& m, const WitnessConfig& cfg) {
  m.validate();
  const int n = m.n_particles;
  separable::EtaQuery q;
  q.n_particles = n;
  q.phased = cfg.phased;
  q.mean_constrained = cfg.mean_constrained_eta;
  q.target_expSz = std::clamp(m.expSz, -0.5 * n, 0.5 * n);
  q.target_expR = std::max(0.0, m.expR);
  const auto res = cfg.eta_cache ? cfg.eta_cache->get_or_compute(q, cfg.eta) : separable::eta_lower_bound(q, cfg.eta);
  const double var = std::max(0.0, m.varR());
  auto r = make_report("xi_new", {{"varR", var}, {"minus_eta", -res.eta}}, cfg);
  r.moments = m;
  r.details["eta"] = res.eta;
  r.diagnostics = res.diagnostics.to_json();
  if (res.diagnostics.status != separable::BoundStatus::converged) {
    r.verdict = Verdict::inconclusive;
    r.reason = "separable bound optimiser did not meet its convergence criterion";
  }
  return r;
}

WitnessReport xi_new(const CollectiveState& state, const WitnessConfig& cfg) {
  auto r = xi_new(spin_moments(state), cfg);
  if (state.space().has_field()) apply_tail_check(r, state.fock_tail(), cfg);
  return r;
}

double linear_entropy_Q(const CollectiveState& state) {
  if (state.space().type == SpaceType::full) {
    const auto p = partial_trace_purities(state, true);
    double mean = 0.0;
    for (double x : p) mean += x;
    mean /= static_cast<double>(p.size());
    return 2.0 * (1.0 - mean);
  }
  return 1.0 - reduced_bloch_vector(state).norm2();
}

WitnessReport xi_spin(const CollectiveState& state, const WitnessConfig& cfg) {
  const auto ops = operators_for(state.space());
  const Eigen::Vector3d mean(expectation(state, ops.s_x).real(), expectation(state, ops.s_y).real(),
                             expectation(state, ops.s_z).real());
  const double len = mean.norm();
  if (len < 1e-8) return undetected_with_reason("xi_spin", "mean spin vanishes; squeezing parameter undefined");

  const Eigen::Vector3d n0 = mean / len;
  Eigen::Vector3d seed = std::abs(n0.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d u = (seed - seed.dot(n0) * n0).normalized();
  const Eigen::Vector3d v = n0.cross(u);
  const auto su = combo(ops, u.x(), u.y(), u.z());
  const auto sv = combo(ops, v.x(), v.y(), v.z());
  Eigen::Matrix2d cov;
  cov(0, 0) = variance(state, su);
  cov(1, 1) = variance(state, sv);
  cov(0, 1) = cov(1, 0) = sym_covariance(state, su, sv);
  const double vmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues()(0);
  const int n = state.space().n_particles;
  auto r = make_report("xi_spin", {{"scaled_min_variance", n * vmin / (len * len)}, {"offset", -1.0}}, cfg);
  r.details["mean_spin"] = {mean.x(), mean.y(), mean.z()};
  r.details["min_perp_variance"] = vmin;
  if (state.space().has_field()) apply_tail_check(r, state.fock_tail(), cfg);
  return r;
}

// ---------------------------------------------------------------------------

WitnessReport single_mode_witness(const CollectiveState& field, SingleModeVariant variant, int theta_scan,
                                  const WitnessConfig& cfg) {
  if (theta_scan < 1) throw std::invalid_argument("single_mode_witness: theta_scan must be >= 1");
  double tail = 0.0;
  const CMatrix rho = field_density(field, &tail);
  const int d = static_cast<int>(rho.rows());
  cplx b = 0.0, b2 = 0.0;
  double n1 = 0.0, n2 = 0.0;
  for (int k = 0; k < d; ++k) {
    n1 += k * rho(k, k).real();
    n2 += static_cast<double>(k) * k * rho(k, k).real();
    // Tr(rho b) with b|k> = sqrt(k)|k-1>
    if (k >= 1) b += std::sqrt(static_cast<double>(k)) * rho(k - 1, k);
    if (k >= 2) b2 += std::sqrt(static_cast<double>(k) * (k - 1)) * rho(k - 2, k);
  }
  const double mandel = n2 - n1 * n1 - n1;
  const cplx bd2 = std::conj(b2);
  double best_sq = 0.0, best_theta = 0.0;
  for (int i = 0; i < theta_scan; ++i) {
    const double th = kPi * i / theta_scan;
    const cplx rot = std::polar(1.0, -2.0 * th);
    const cplx c = variant == SingleModeVariant::as_printed ? b * b * std::conj(rot) : std::conj(b) * std::conj(b) * rot;
    const double im = (bd2 * rot - c).imag();
    if (im * im > best_sq) {
      best_sq = im * im;
      best_theta = th;
    }
  }
  auto r = make_report("single_mode", {{"mandel_q", mandel}, {"minus_imag_sq", -best_sq}}, cfg);
  r.details = {{"variant", to_string(variant)},
               {"theta_min", best_theta},
               {"theta_scan", theta_scan},
               {"mandel_q", mandel},
               {"mean_n", n1}};
  apply_tail_check(r, tail, cfg);
  return r;
}

WitnessReport single_mode_witness(const CollectiveState& field, const WitnessConfig& cfg) {
  return single_mode_witness(field, cfg.single_mode_variant, cfg.theta_scan, cfg);
}

double mandel_q_field(const CollectiveState& state) {
  const CMatrix rho = field_density(state, nullptr);
  double n1 = 0.0, n2 = 0.0;
  for (Eigen::Index k = 0; k < rho.rows(); ++k) {
    n1 += k * rho(k, k).real();
    n2 += static_cast<double>(k) * k * rho(k, k).real();
  }
  return n2 - n1 * n1 - n1;
}

// ---------------------------------------------------------------------------

JointMoments joint_moments(const CollectiveState& joint) {
  if (joint.space().type != SpaceType::dicke_fock)
    throw std::invalid_argument("joint_moments: requires a spin (x) field state");
  const auto ops = operators_for(joint.space());
  const OperatorMatrix spa = ops.s_plus * ops.a;
  const OperatorMatrix smad = ops.s_minus * ops.a_dag;
  const OperatorMatrix h1 = spa + smad;
  const OperatorMatrix h2 = (spa - smad) * cplx(0.0, 1.0);
  const OperatorMatrix r = ops.s_plus * ops.s_minus;

  JointMoments m;
  m.expSz = expectation(joint, ops.s_z).real();
  m.expH1 = expectation(joint, h1).real();
  m.expH2 = expectation(joint, h2).real();
  m.expH1sq = expectation(joint, h1 * h1).real();
  m.expH2sq = expectation(joint, h2 * h2).real();
  m.symH1H2 = 0.5 * (expectation(joint, h1 * h2) + expectation(joint, h2 * h1)).real();
  m.cross = expectation(joint, r * cplx(-1.0) + ops.s_z * (ops.a * ops.a_dag) * cplx(2.0));
  m.expRn = expectation(joint, r * ops.n).real();
  m.expSmAdag = expectation(joint, smad);
  m.expSmA = expectation(joint, ops.s_minus * ops.a);
  m.fock_tail = joint.fock_tail();
  return m;
}

WitnessReport mu_SR(const JointMoments& m, const WitnessConfig& cfg) {
  const double f1 = m.varH1() - 2.0 * m.expSz;
  const double f2 = m.varH2() - 2.0 * m.expSz;
  const double cov = m.covH1H2();
  auto r = make_report("mu_SR",
                       {{"factor_product", f1 * f2}, {"minus_cross_sq", -std::norm(m.cross)}, {"minus_cov_sq", -cov * cov}},
                       cfg);
  r.details = {{"factor1", f1},   {"factor2", f2},          {"varH1", m.varH1()}, {"varH2", m.varH2()},
               {"expSz", m.expSz}, {"cross_re", m.cross.real()}, {"cross_im", m.cross.imag()}, {"covH1H2", cov}};
  apply_tail_check(r, m.fock_tail, cfg);
  return r;
}

WitnessReport mu_SR(const CollectiveState& joint, const WitnessConfig& cfg) { return mu_SR(joint_moments(joint), cfg); }

WitnessReport mu_HZ(const JointMoments& m, const WitnessConfig& cfg) {
  const double primary = m.expRn - std::norm(m.expSmAdag);
  const double alternate = m.expRn - std::norm(m.expSmA);
  const bool use_alt = cfg.hz_alternate_pairing && alternate < primary;
  auto r = make_report("mu_HZ",
                       {{"expRn", m.expRn}, {"minus_abs_sq", -std::norm(use_alt ? m.expSmA : m.expSmAdag)}}, cfg);
  r.details = {{"pairing", use_alt ? "S-a" : "S-a+"}, {"primary", primary}};
  if (cfg.hz_alternate_pairing) r.details["alternate"] = alternate;
  apply_tail_check(r, m.fock_tail, cfg);
  return r;
}

WitnessReport mu_HZ(const CollectiveState& joint, const WitnessConfig& cfg) { return mu_HZ(joint_moments(joint), cfg); }

WitnessReport mu_spin(const CollectiveState& joint, const WitnessConfig& cfg) {
  if (joint.space().type != SpaceType::dicke_fock)
    throw std::invalid_argument("mu_spin: requires a spin (x) field state");
  const auto ops = operators_for(joint.space());
  const double sz = expectation(joint, ops.s_z).real();
  if (std::abs(sz) <= 1e-8) return undetected_with_reason("mu_spin", "unpolarised ensemble (<Sz> = 0)");
  const double norm = 1.0 / std::sqrt(std::abs(sz));
  const double sgn = -sz > 0 ? 1.0 : -1.0;
  const double r2 = 1.0 / std::sqrt(2.0);
  const OperatorMatrix xf = (ops.a + ops.a_dag) * cplx(r2);
  const OperatorMatrix pf = (ops.a - ops.a_dag) * cplx(0.0, -r2);
  const OperatorMatrix A = xf + ops.s_x * cplx(norm);
  const OperatorMatrix B = pf - ops.s_y * cplx(sgn * norm);
  auto r = make_report("mu_spin", {{"varA", variance(joint, A)}, {"varB", variance(joint, B)}, {"offset", -2.0}}, cfg);
  r.details = {{"expSz", sz}};
  apply_tail_check(r, joint.fock_tail(), cfg);
  return r;
}

// ---------------------------------------------------------------------------

double gn_wavefunction(const CollectiveState& state, const ModePair& modes, int order) {
  if (order < 1 || order > 4) throw std::invalid_argument("gn_wavefunction: order must be 1..4");
  if (!(modes.volume > 0.0)) throw std::invalid_argument("gn_wavefunction: volume must be positive");
  const auto t = state.space().type;
  if (t != SpaceType::dicke && t != SpaceType::dicke_fock)
    throw std::invalid_argument("gn_wavefunction: requires a symmetric (Dicke) spin state");
  const int n = state.space().n_particles;
  const int k = order;
  const CMatrix rho = state.reduced_spin();

  // <c_e^+j c_g^+(k-j) c_e^l c_g^(k-l)>, basis index i = number of excited atoms.
  auto moment = [&](int j, int l) {
    cplx acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      if (i < l || n - i < k - l) continue;
      const int ip = i - l + j;
      if (ip < 0 || ip > n) continue;
      const double amp = std::sqrt(falling(i, l) * falling(n - i, k - l) * falling(ip, j) *
                                   falling(n - i + l - j, k - j));
      acc += rho(i, ip) * amp;
    }
    return acc;
  };

  cplx num = 0.0;
  for (int j = 0; j <= k; ++j)
    for (int l = 0; l <= k; ++l) {
      double w = 0.0;
      if (modes.kind == ModeKind::plane_wave) {
        if (j != l) continue;
        w = 1.0;
      } else {
        const int p = j + l;
        if (p % 2) continue;
        // (sqrt 2)^p times the average of cos^p over a period
        w = std::pow(2.0, 0.5 * p) * binom(p, p / 2) / std::pow(2.0, p);
      }
      num += binom(k, j) * binom(k, l) * w * moment(j, l);
    }
  return num.real() / std::pow(static_cast<double>(n), k);
}

}  // namespace superwit::criteria
