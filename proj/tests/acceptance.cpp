// Acceptance checks. `acceptance --criterion k` runs one; no arguments runs all.
// Each criterion prints indented detail lines and exactly one PASS/FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "superwit/criteria.hpp"
#include "superwit/experiments.hpp"
#include "superwit/models.hpp"
#include "superwit/separable.hpp"

using namespace superwit;
namespace ex = superwit::experiments;
namespace cr = superwit::criteria;
namespace sep = superwit::separable;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    notes.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", what));
    pass = pass && ok;
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CVector coherent(cplx alpha, int n_max) {
  CVector v(n_max + 1);
  v[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n <= n_max; ++n) v[n] = v[n - 1] * alpha / std::sqrt(double(n));
  return v;
}

std::vector<double> dirichlet(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double s = 0;
  for (auto& x : w) s += (x = e(rng));
  for (auto& x : w) x /= s;
  return w;
}

bool near_grid(double x, double v) { return std::abs(x - v) < 1e-9; }

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_comm = 0, worst_casimir = 0, worst_r = 0;
  for (int n = 2; n <= 64; ++n) {
    const DickeSpace sp(n);
    const auto s = build_collective_operators(sp);
    const double c = sp.spin() * (sp.spin() + 1);
    const double scale = std::max(1.0, c);
    worst_comm = std::max({worst_comm, max_abs_diff(commutator(s.plus, s.minus), s.z * cplx(2)),
                           max_abs_diff(commutator(s.z, s.plus), s.plus),
                           max_abs_diff(commutator(s.z, s.minus), s.minus * cplx(-1)),
                           max_abs_diff(commutator(s.x, s.y), s.z * cplx(0, 1))});
    const auto s2 = s.x * s.x + s.y * s.y + s.z * s.z;
    worst_casimir = std::max(worst_casimir, max_abs_diff(s2, OperatorMatrix::identity(sp.dim()) * cplx(c)) / scale);
    worst_r = std::max(worst_r, max_abs_diff(s.plus * s.minus, s2 - s.z * s.z + s.z) / scale);
  }
  o.check(worst_comm < 1e-12, fmt::format("su(2) commutators, N=2..64: max deviation {:.2e}", worst_comm));
  o.check(worst_casimir < 1e-12, fmt::format("Casimir S^2 = S(S+1): max relative deviation {:.2e}", worst_casimir));
  o.check(worst_r < 1e-12, fmt::format("R = S^2 - Sz^2 + Sz: max relative deviation {:.2e}", worst_r));

  bool fock_ok = true;
  for (int nm : {1, 5, 40}) {
    const auto f = build_fock_operators(FockSpace(nm));
    const CMatrix c = commutator(f.a, f.a_dag).dense();
    for (int i = 0; i <= nm; ++i)
      for (int j = 0; j <= nm; ++j) {
        const cplx want = i != j ? 0.0 : (i < nm ? 1.0 : -double(nm));
        fock_ok = fock_ok && std::abs(c(i, j) - want) < 1e-12;
      }
    for (int n = 0; n <= nm; ++n) fock_ok = fock_ok && std::abs(f.n.element(n, n) - double(n)) < 1e-14;
  }
  o.check(fock_ok, "[a, a^+] = 1 below the cutoff, -n_max on the last level; <n|a^+a|n> = n");
  const double dt = seconds_since(t0);
  o.check(dt < 10, fmt::format("runtime {:.1f} s < 10 s", dt));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  const double tol = -1e-6;
  cr::WitnessConfig w;

  // xi_new on random separable mixtures of N-qubit product states.
  {
    int count = 0, flagged = 0;
    double worst = std::numeric_limits<double>::infinity();
    const int sizes[] = {2, 4, 6, 8};
    for (int i = 0; i < 1000; ++i) {
      const int n = sizes[i % 4];
      sep::SeparableSampler sampler(n, 5000 + i);
      const auto mix = sampler.next_mixture();
      cr::WitnessReport r;
      if (i < 40) {
        // Explicit density-matrix path for a subset.
        const auto st = CollectiveState::density(SpaceDescriptor::full(n), mix.density_matrix());
        r = cr::xi_new(st, w);
      } else {
        const auto m = mix.moments();
        r = cr::xi_new(MomentSet{n, m.expR, m.expR2, m.expSz}, w);
      }
      if (r.verdict == cr::Verdict::inconclusive) ++flagged;
      worst = std::min(worst, r.value);
      ++count;
    }
    o.check(worst >= tol, fmt::format("xi_new: {} separable mixtures (N=2,4,6,8; 250 at N=8), min {:.3e}, {} inconclusive",
                                      count, worst, flagged));
  }

  // Ensemble-field witnesses on mixtures of (symmetric spin state) x (field state).
  {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    double worst_sr = 1e300, worst_hz = 1e300, worst_spin = 1e300;
    const int nm = 30, count = 1000;
    int invalid = 0;
    for (int i = 0; i < count; ++i) {
      const int n = 1 + i % 6;
      const int k = 1 + static_cast<int>(u(rng) * 3);
      const auto wts = dirichlet(k, rng);
      CMatrix rho = CMatrix::Zero((n + 1) * (nm + 1), (n + 1) * (nm + 1));
      for (int c = 0; c < k; ++c) {
        const auto spin = random_state(RandomStateKind::symmetric, n, 900000 + 7 * i + c).vector();
        CVector field;
        if (u(rng) < 0.5) {
          field = coherent(std::polar(2.0 * u(rng), 2 * std::numbers::pi * u(rng)), nm);
        } else {
          field = CVector::Zero(nm + 1);
          for (int q = 0; q <= 5; ++q) field[q] = cplx(u(rng) - 0.5, u(rng) - 0.5);
          field.normalize();
        }
        const auto prod = dicke_fock_product(spin, field, n, nm).vector();
        rho += wts[c] * prod * prod.adjoint();
      }
      const auto st = CollectiveState::density(SpaceDescriptor::dicke_fock(n, nm), rho, 1e-9);
      const auto sr = cr::mu_SR(st, w), hz = cr::mu_HZ(st, w), sp = cr::mu_spin(st, w);
      invalid += sr.verdict == cr::Verdict::invalid;
      worst_sr = std::min(worst_sr, sr.value);
      worst_hz = std::min(worst_hz, hz.value);
      worst_spin = std::min(worst_spin, sp.value);
    }
    o.check(worst_sr >= tol, fmt::format("mu_SR: {} ensemble-field separable mixtures, min {:.3e} ({} invalid)", count,
                                         worst_sr, invalid));
    o.check(worst_hz >= tol, fmt::format("mu_HZ: same states, min {:.3e}", worst_hz));
    o.check(worst_spin >= tol, fmt::format("mu_spin: same states, min {:.3e}", worst_spin));
  }

  // Single-mode witness (central moment) on mixtures of coherent states.
  {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0, 1);
    const int nm = 50, count = 1000;
    double worst = 1e300;
    for (int i = 0; i < count; ++i) {
      const int k = 1 + static_cast<int>(u(rng) * 3);
      const auto wts = dirichlet(k, rng);
      CMatrix rho = CMatrix::Zero(nm + 1, nm + 1);
      for (int c = 0; c < k; ++c) {
        const auto v = coherent(std::polar(2.5 * u(rng), 2 * std::numbers::pi * u(rng)), nm);
        rho += wts[c] * v * v.adjoint();
      }
      rho /= rho.trace().real();
      const auto st = CollectiveState::density(SpaceDescriptor::fock(nm), rho, 1e-9);
      worst = std::min(worst, cr::single_mode_witness(st, cr::SingleModeVariant::central_moment, 180, w).value);
    }
    o.check(worst >= tol, fmt::format("single-mode witness (central moment): {} coherent-state mixtures, min {:.3e}",
                                      count, worst));
  }
  const double dt = seconds_since(t0);
  o.check(dt < 600, fmt::format("runtime {:.0f} s < 600 s", dt));
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int n = 2; n <= 10; ++n)
    for (int k = 0; k < 200; ++k) {
      sep::ProductState p;
      for (int j = 0; j < n; ++j) {
        p.theta.push_back(std::acos(1 - 2 * u(rng)));
        p.phi.push_back(2 * std::numbers::pi * u(rng));
        if (k % 2) p.phase.push_back(2 * std::numbers::pi * u(rng));
      }
      const auto a = sep::product_moments(p), b = sep::statevector_oracle(p);
      worst = std::max({worst, std::abs(a.expR - b.expR), std::abs(a.expR2 - b.expR2), std::abs(a.expSz - b.expSz)});
    }
  o.check(worst < 1e-10, fmt::format("product_moments vs 2^N oracle, 200 states x N=2..10: max |dev| {:.2e}", worst));

  std::normal_distribution<double> g;
  double worst_se = 0;
  for (int n = 1; n <= 10; ++n)
    for (bool phased : {false, true})
      for (int rep = 0; rep < 3; ++rep) {
        models::SuperradianceParams p;
        p.n_particles = n;
        p.radius = 0.7;
        p.seed = 31 * n + rep;
        auto s = models::timed_dicke_initial(models::sample_positions(p), p.k0());
        for (int j = 0; j < n; ++j) s.beta[j] = cplx(g(rng), g(rng));
        s.gamma_ph = cplx(g(rng), g(rng));
        const double norm = std::sqrt(s.beta.squaredNorm() + std::norm(s.gamma_ph));
        s.beta /= norm;
        s.gamma_ph /= norm;
        const auto a = models::single_excitation_moments(s, phased);
        const auto b = models::single_excitation_oracle(s, phased);
        const double d[] = {a.spin.expR - b.spin.expR,
                            a.spin.expR2 - b.spin.expR2,
                            a.spin.expSz - b.spin.expSz,
                            a.joint.expH1 - b.joint.expH1,
                            a.joint.expH2 - b.joint.expH2,
                            a.joint.expH1sq - b.joint.expH1sq,
                            a.joint.expH2sq - b.joint.expH2sq,
                            a.joint.symH1H2 - b.joint.symH1H2,
                            std::abs(a.joint.cross - b.joint.cross),
                            std::abs(a.joint.expSmAdag - b.joint.expSmAdag),
                            a.joint.expRn - b.joint.expRn};
        for (double x : d) worst_se = std::max(worst_se, std::abs(x));
      }
  o.check(worst_se < 1e-10,
          fmt::format("single-excitation closed form vs 2^N x photon oracle, N=1..10: max |dev| {:.2e}", worst_se));
  return o;
}

Outcome criterion4() {
  Outcome o;
  double worst_end = 0;
  for (int n : {2, 4, 8, 16, 32, 64}) {
    worst_end = std::max(worst_end, std::abs(sep::eta_lower_bound({n, 0.0, -n / 2.0}).eta));
    worst_end = std::max(worst_end, std::abs(sep::eta_lower_bound({n, double(n), n / 2.0}).eta));
  }
  o.check(worst_end < 1e-8, fmt::format("endpoints eta(0,-N/2) = eta(N,N/2) = 0, N=2..64: max |eta| {:.2e}", worst_end));

  // Random feasible queries from symmetric states.
  double min_eta = 1e300;
  int queries = 0;
  for (int n : {4, 8}) {
    const auto ops = operators_for(SpaceDescriptor::dicke(n));
    for (int k = 0; k < 15; ++k) {
      const auto st = random_state(RandomStateKind::symmetric, n, 400 + 20 * n + k);
      const auto m = spin_moments(st);
      min_eta = std::min(min_eta, sep::eta_lower_bound({n, m.expR, m.expSz}).eta);
      ++queries;
    }
  }
  o.check(min_eta >= 0, fmt::format("eta >= 0 on {} random queries: min {:.3e}", queries, min_eta));

  // Dense sampling cross-check at N=4.
  const int n = 4;
  const auto samples = sep::separable_sampler(n, 1000000, 20170311);
  std::vector<std::pair<double, double>> q;
  for (double m : {-1.0, 0.0, 1.0}) q.emplace_back(6 - m * (m - 1), m);  // Dicke |2,m>
  q.emplace_back(3.0, -0.5);
  q.emplace_back(1.0, -1.5);
  q.emplace_back(5.0, 1.2);
  double worst_gap = 1e300;
  for (auto [r, s] : q) {
    const auto eta = sep::eta_lower_bound({n, r, s});
    const auto env = sep::sampled_envelope(samples, r, s);
    if (!env) {
      o.check(false, fmt::format("no samples around <Sz> = {}", s));
      continue;
    }
    worst_gap = std::min(worst_gap, *env - eta.eta);
    o.note(fmt::format("N=4 (r={}, s={}): eta {:.6f} [{}], sampled envelope {:.6f}", r, s, eta.eta,
                       sep::to_string(eta.diagnostics.status), *env));
  }
  o.check(worst_gap >= -1e-6,
          fmt::format("10^6 separable samples never undercut eta by more than 1e-6: min(envelope - eta) {:.3e}", worst_gap));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig1";
  const auto r = ex::run_fig1(cfg);
  const auto m = r.table.values("m"), q = r.table.values("Q"), xi = r.table.values("xi_new");
  bool ends = true, interior = true, qok = true;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::abs(m[i]) == 8) ends = ends && std::abs(xi[i]) < 1e-6;
    else interior = interior && xi[i] < 0 && r.table.flags[i].empty();
    qok = qok && std::abs(q[i] - (1 - 4 * m[i] * m[i] / 256)) < 1e-9;
  }
  const auto peak = std::max_element(q.begin(), q.end()) - q.begin();
  o.check(ends, fmt::format("xi_new(m=-8) = {:.2e}, xi_new(m=+8) = {:.2e}", xi.front(), xi.back()));
  o.check(interior, fmt::format("xi_new < 0 for |m| < 8 (xi_new(0) = {:.4f})", xi[8]));
  o.check(qok && m[peak] == 0 && std::abs(q[peak] - 1) < 1e-9, "Q(m) = 1 - 4m^2/256, peak 1 at m = 0");
  const double dt = seconds_since(t0);
  o.check(dt < 300, fmt::format("runtime {:.0f} s < 300 s", dt));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = Clock::now();
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig2";
  const auto r = ex::run_fig2(cfg);
  const auto g = r.table.values("g/g_c"), n = r.table.values("n_per_N"), xi = r.table.values("xi_new"),
             xs = r.table.values("xi_spin"), q = r.table.values("Q"), eta = r.table.values("eta"),
             var = r.table.values("varR");
  double n05 = NAN, n15 = NAN;
  bool xi_ok = true, xs_ok = true;
  double q_low = -1, q_high = 2;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (near_grid(g[i], 0.5)) n05 = n[i];
    if (near_grid(g[i], 1.5)) n15 = n[i];
    if (g[i] >= 1.2 - 1e-9) {
      if (!(xi[i] < 0)) {
        xi_ok = false;
        o.note(fmt::format("g = {:.2f} g_c: xi_new = {:.4g} (Var R = {:.4g}, eta = {:.4g})", g[i], xi[i], var[i], eta[i]));
      }
      xs_ok = xs_ok && xs[i] >= -1e-6;
      q_high = std::min(q_high, q[i]);
    }
    if (g[i] <= 0.8 + 1e-9) q_low = std::max(q_low, q[i]);
  }
  o.check(n05 < 0.02, fmt::format("<a^+a>/N at 0.5 g_c = {:.4g} < 0.02", n05));
  o.check(n15 > 0.1, fmt::format("<a^+a>/N at 1.5 g_c = {:.4g} > 0.1", n15));
  o.check(xi_ok, "xi_new < 0 for all g >= 1.2 g_c");
  o.check(xs_ok, "xi_spin >= 0 for all g >= 1.2 g_c");
  o.check(q_high > q_low, fmt::format("Q rises through the transition: max Q(g <= 0.8 g_c) = {:.4f} < min Q(g >= 1.2 g_c) = {:.4f}",
                                      q_low, q_high));
  const double dt = seconds_since(t0);
  o.check(dt < 900, fmt::format("runtime {:.0f} s < 900 s", dt));
  return o;
}

Outcome criterion7() {
  Outcome o;
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig3";
  const auto r = ex::run_fig3(cfg);
  const auto g = r.table.values("g/g_c"), sr = r.table.values("mu_SR"), hz = r.table.values("mu_HZ"),
             sp = r.table.values("mu_spin");
  const double tol = 1e-6;
  bool sr_ok = true, sp_ok = true, subset = true;
  int sr_neg = 0, hz_neg = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool in = g[i] >= 1.2 - 1e-9;
    if (in && !(sr[i] < -tol)) sr_ok = false;
    sp_ok = sp_ok && sp[i] >= -tol;
    if (hz[i] < -tol && !(sr[i] < -tol)) subset = false;
    sr_neg += sr[i] < -tol;
    hz_neg += hz[i] < -tol;
  }
  for (std::size_t i = 0; i < g.size(); i += 5)
    o.note(fmt::format("g = {:.1f} g_c: mu_SR = {:.4g}, mu_HZ = {:.4g}, mu_spin = {:.4g}", g[i], sr[i], hz[i], sp[i]));
  o.check(sr_ok, fmt::format("mu_SR < 0 on [1.2, 3] g_c (negative at {} of {} grid points)", sr_neg, g.size()));
  o.check(sp_ok, "mu_spin >= -1e-6 everywhere");
  o.check(subset, fmt::format("mu_HZ detection region within mu_SR's ({} vs {} points)", hz_neg, sr_neg));
  o.check(hz.back() >= -tol && sr.back() < -tol,
          fmt::format("top of range: mu_HZ = {:.4g} >= 0 while mu_SR = {:.4g} < 0", hz.back(), sr.back()));
  return o;
}

Outcome criterion8() {
  Outcome o;
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig4";
  const auto r = ex::run_fig4(cfg);
  const auto g = r.table.values("g/g_c"), g2 = r.table.values("g2"), g3 = r.table.values("g3"),
             g4 = r.table.values("g4"), mq = r.table.values("mandel_q_field");
  bool below = true;
  double g2_at2 = NAN, mq_at2 = NAN;
  auto first_above = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] > 1) return static_cast<int>(i);
    return -1;
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 1 - 1e-9) below = below && g2[i] <= 1;
    if (near_grid(g[i], 2.0)) {
      g2_at2 = g2[i];
      mq_at2 = mq[i];
    }
  }
  o.check(below, "g2 <= 1 for g < g_c");
  o.check(g2_at2 > 1, fmt::format("g2(2 g_c) = {:.4f} > 1", g2_at2));
  o.check(mq_at2 < 0, fmt::format("Mandel Q of the field at 2 g_c = {:.4f} < 0", mq_at2));
  const int c2 = first_above(g2), c3 = first_above(g3), c4 = first_above(g4);
  const auto at = [&](int i) { return i < 0 ? NAN : g[i]; };
  o.check(c2 >= 0 && c3 >= 0 && c4 >= 0 && std::abs(c3 - c2) <= 2 && std::abs(c4 - c2) <= 2,
          fmt::format("g2, g3, g4 first exceed 1 at g/g_c = {:.2f}, {:.2f}, {:.2f} (within two grid steps)", at(c2), at(c3),
                      at(c4)));
  return o;
}

Outcome criterion9() {
  Outcome o;
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig5";
  const auto r = ex::run_fig5(cfg);
  const auto u = r.table.values("U/(N*omega_exc)"), xi = r.table.values("xi_new"), g2 = r.table.values("g2");
  int ixi = -1, ig2 = -1;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (ixi < 0 && xi[i] < -1e-6) ixi = static_cast<int>(i);
    if (ig2 < 0 && g2[i] > 1) ig2 = static_cast<int>(i);
  }
  const bool found = ixi >= 0 && ig2 >= 0;
  o.check(found, "both thresholds found on the grid");
  if (!found) return o;
  o.check(u[ixi] >= 0.5 && u[ixi] <= 2, fmt::format("xi_new first < -1e-6 at U/(N w) = {:.3f} in [0.5, 2]", u[ixi]));
  o.check(u[ig2] >= 0.5 && u[ig2] <= 2, fmt::format("g2 first > 1 at U/(N w) = {:.3f} in [0.5, 2]", u[ig2]));
  o.check(std::abs(ixi - ig2) <= 1, "thresholds coincide within one grid step");
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto t0 = Clock::now();
  ex::ExperimentConfig cfg;
  cfg.experiment = "fig6";
  cfg.n_particles = 200;
  const auto r = ex::run_fig6(cfg);

  const ex::Table* cal = nullptr;
  for (const auto& [suffix, t] : r.extra)
    if (suffix == "_calibration") cal = &t;
  if (cal == nullptr) {
    o.check(false, "calibration table present");
  } else {
    const auto p = cal->values("sum_beta_sq"), e = cal->values("exp(-N*gamma*t)");
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] / e[i] - 1));
    o.check(worst < 0.01, fmt::format("coincident atoms: sum|beta|^2 = exp(-N gamma t) to {:.2e} (< 1%)", worst));
  }

  const auto t = r.table.values("t*gamma"), xi = r.table.values("xi_new"), mu = r.table.values("mu_SR"),
             hz = r.table.values("mu_HZ");
  for (std::size_t i = 0; i < t.size(); ++i)
    o.note(fmt::format("t = {:.2f}: sum|beta|^2 = {:.4g}, xi_new = {:.4g}, mu_SR = {:.4g}, mu_HZ = {:.4g}{}", t[i],
                       r.table.values("sum_beta_sq")[i], xi[i], mu[i], hz[i],
                       r.table.flags[i].empty() ? "" : "  [" + r.table.flags[i] + "]"));
  o.check(xi[0] < -1e-6, fmt::format("xi_new(0) = {:.4g} < 0", xi[0]));
  double smallest = std::abs(xi[0]);
  for (std::size_t i = 1; i < xi.size(); ++i) smallest = std::min(smallest, std::abs(xi[i]));
  o.check(smallest < 0.05 * std::abs(xi[0]),
          fmt::format("|xi_new| falls to {:.3g} = {:.2f}% of |xi_new(0)|", smallest, 100 * smallest / std::abs(xi[0])));
  o.check(std::abs(mu[0]) < 1e-8, fmt::format("mu_SR(0) = {:.2e}", mu[0]));
  const auto imin = std::min_element(mu.begin(), mu.end()) - mu.begin();
  o.check(mu[imin] < -1e-6 && imin > 0 && imin + 1 < static_cast<long>(mu.size()),
          fmt::format("mu_SR attains a negative interior minimum {:.4g} at t = {:.2f}", mu[imin], t[imin]));
  o.check(std::abs(mu.back()) <= 0.1 * std::abs(mu[imin]),
          fmt::format("mu_SR returns to {:.4g} = {:.1f}% of its minimum", mu.back(), 100 * std::abs(mu.back() / mu[imin])));
  o.check(r.table.flagged() == 0, fmt::format("{} flagged rows", r.table.flagged()));
  const double dt = seconds_since(t0);
  o.check(dt < 1800, fmt::format("runtime {:.0f} s < 1800 s", dt));
  return o;
}

Outcome criterion11() {
  Outcome o;
  const int n = 64;
  const auto field = build_fock_operators(FockSpace(n));
  std::mt19937_64 rng(64);
  std::uniform_real_distribution<double> u(0, 1);

  std::vector<std::pair<std::string, CVector>> states;
  // Slightly tilted coherent spin states.
  for (double theta : {0.05, 0.1, 0.2}) {
    CVector v(n + 1);
    for (int k = 0; k <= n; ++k) {
      const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      v[k] = std::exp(0.5 * logc + k * std::log(std::sin(theta / 2)) + (n - k) * std::log(std::cos(theta / 2)));
    }
    states.emplace_back(fmt::format("CSS theta={}", theta), v.normalized());
  }
  // Random superpositions with geometrically suppressed excitations. "Weak" means
  // <n> <= 0.5, i.e. under 1% of N; states above that are skipped.
  for (int rep = 0; rep < 7; ++rep) {
    CVector v = CVector::Zero(n + 1);
    const double x = 0.2 + 0.05 * rep;
    for (int k = 0; k <= 8; ++k) v[k] = std::polar(std::pow(x, k) * (0.5 + u(rng)), 2 * std::numbers::pi * u(rng));
    states.emplace_back(fmt::format("random x={:.2f}", x), v.normalized());
  }
  double worst = 0;
  for (const auto& [name, v] : states) {
    const auto st = CollectiveState::pure(SpaceDescriptor::dicke(n), v);
    const auto hp = CollectiveState::pure(SpaceDescriptor::fock(n), v);
    const double lhs = spin_moments(st).varR() / (double(n) * n);
    const double rhs = variance(hp, field.n);
    const double mean_n = expectation(hp, field.n).real();
    if (mean_n > 0.5) {
      o.note(fmt::format("{}: <n> = {:.3g} > 0.5, not weakly excited; skipped", name, mean_n));
      continue;
    }
    const double dev = std::abs(lhs / rhs - 1);
    worst = std::max(worst, dev);
    o.note(fmt::format("{}: Var(R)/N^2 = {:.6g}, HP Var(n) = {:.6g}, <n> = {:.3g}, dev {:.2f}%", name, lhs, rhs, mean_n,
                       100 * dev));
  }
  o.check(worst < 0.05, fmt::format("N=64 weakly excited states: max relative deviation {:.2f}% < 5%", 100 * worst));
  return o;
}

Outcome criterion12() {
  Outcome o;
  const auto base = std::filesystem::temp_directory_path() / "superwit_acceptance_determinism";
  std::vector<ex::ExperimentConfig> cfgs;
  auto add = [&](const std::string& name, auto tweak) {
    ex::ExperimentConfig c;
    c.experiment = name;
    tweak(c);
    cfgs.push_back(c);
  };
  add("fig1", [](auto&) {});
  add("fig2", [](auto& c) { c.n_particles = 8; c.g_grid = {0, 3, 7}; });
  add("fig3", [](auto& c) { c.n_particles = 8; c.g_grid = {0, 3, 7}; });
  add("fig4", [](auto&) {});
  add("fig5", [](auto&) {});
  add("fig6", [](auto& c) { c.n_particles = 40; c.t_grid = {0, 3, 4}; });
  add("random-scan", [](auto& c) { c.n_particles = 6; c.count = 30; });

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (auto cfg : cfgs) {
    std::vector<std::string> runs;
    for (int k = 0; k < 2; ++k) {
      cfg.out_dir = base / fmt::format("run{}", k);
      std::filesystem::remove_all(cfg.out_dir);
      std::string all;
      for (const auto& p : ex::write_outputs(ex::run(cfg), cfg))
        if (p.extension() == ".csv") all += p.filename().string() + "\n" + slurp(p);
      runs.push_back(all);
    }
    o.check(!runs[0].empty() && runs[0] == runs[1],
            fmt::format("{}: {} bytes of CSV, identical across reruns", cfg.experiment, runs[0].size()));
  }
  std::filesystem::remove_all(base);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-12)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<Outcome()>> all{
      {1, criterion1}, {2, criterion2},  {3, criterion3},   {4, criterion4},   {5, criterion5},   {6, criterion6},
      {7, criterion7}, {8, criterion8},  {9, criterion9},   {10, criterion10}, {11, criterion11}, {12, criterion12}};

  int failed = 0;
  for (const auto& [k, fn] : all) {
    if (only != 0 && k != only) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.check(false, fmt::format("exception: {}", e.what()));
    }
    for (const auto& n : out.notes) fmt::print("  {}\n", n);
    fmt::print("criterion {:>2}: {} ({:.1f} s)\n", k, out.pass ? "PASS" : "FAIL", seconds_since(t0));
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
