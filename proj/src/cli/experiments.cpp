#include "superwit/experiments.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/core.h>

#include "superwit/log.hpp"
#include "superwit/models.hpp"
#include "superwit/separable.hpp"
#include "superwit/state_io.hpp"

#ifndef SUPERWIT_VERSION
#define SUPERWIT_VERSION "0.0.0"
#endif

namespace superwit::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// FNV-1a; only needs to be stable, not strong.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string join_flags(const std::vector<std::string>& f) {
  std::string out;
  for (const auto& s : f) {
    if (s.empty()) continue;
    if (!out.empty()) out += ';';
    out += s;
  }
  return out;
}

// Per-row flag text for a witness report.
std::string flag_of(const criteria::WitnessReport& r) {
  if (r.verdict == criteria::Verdict::inconclusive) return r.name + ":inconclusive";
  if (r.verdict == criteria::Verdict::invalid) return r.name + ":invalid";
  return {};
}

struct Scan {
  Table table;
  std::vector<std::vector<std::string>> row_flags;

  Scan(std::vector<Column> cols, std::size_t n) {
    table.columns = std::move(cols);
    table.rows.assign(n, std::vector<double>(table.columns.size(), kNaN));
    row_flags.assign(n, {});
  }
  Table finish() {
    table.flags.clear();
    for (auto& f : row_flags) table.flags.push_back(join_flags(f));
    return std::move(table);
  }
};

// Run body(i) over the grid; an exception marks the row instead of aborting the scan.
void scan_rows(Scan& scan, int threads, const std::function<void(int)>& body) {
  parallel_for(static_cast<int>(scan.table.rows.size()), threads, [&](int i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      scan.row_flags[i].push_back(fmt::format("error:{}", e.what()));
    }
  });
}

struct CacheGuard {
  std::unique_ptr<separable::EtaCache> cache;
  explicit CacheGuard(const ExperimentConfig& cfg, criteria::WitnessConfig& w) {
    if (!cfg.eta_cache.empty()) {
      cache = std::make_unique<separable::EtaCache>(cfg.eta_cache);
      w.eta_cache = cache.get();
    }
  }
  ~CacheGuard() {
    if (cache) {
      try {
        cache->save();
      } catch (const std::exception& e) {
        warn(e.what());
      }
    }
  }
};

models::DickeParams dicke_params(const ExperimentConfig& cfg, double g_ratio) {
  models::DickeParams p;
  p.n_particles = cfg.n_particles;
  p.omega_eg = cfg.omega_eg;
  p.omega_a = cfg.omega_a;
  p.g = g_ratio * p.g_c();
  return p;
}

CollectiveState spin_part(const CollectiveState& s) {
  if (s.space().type == SpaceType::dicke) return s;
  if (s.space().type == SpaceType::dicke_fock)
    return CollectiveState::density(SpaceDescriptor::dicke(s.space().n_particles), s.reduced_spin());
  throw std::invalid_argument("symmetric spin state required");
}

CollectiveState field_part(const CollectiveState& s) {
  if (s.space().type == SpaceType::fock) return s;
  if (s.space().type == SpaceType::dicke_fock)
    return CollectiveState::density(SpaceDescriptor::fock(s.space().n_max), s.reduced_field());
  throw std::invalid_argument("state has no field factor");
}

}  // namespace

// ---------------------------------------------------------------------------

const char* version() { return SUPERWIT_VERSION; }

std::vector<double> Grid::values() const {
  if (points < 1) throw std::invalid_argument("grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
  return v;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", experiment},
          {"N", n_particles},
          {"seed", seed},
          {"tolerance", tolerance},
          {"phased", phased},
          {"single_mode_variant", criteria::to_string(single_mode_variant)},
          {"lamb_shift", lamb_shift},
          {"full_scale", full_scale},
          {"eta_starts", eta_starts},
          {"g_grid", g_grid.to_json()},
          {"omega_eg", omega_eg},
          {"omega_a", omega_a},
          {"u_grid", u_grid.to_json()},
          {"omega_exc", omega_exc},
          {"t_grid", t_grid.to_json()},
          {"radius", radius},
          {"coincident", coincident},
          {"count", count},
          {"kind", kind == RandomStateKind::full ? "full" : "symmetric"}};
}

std::string ExperimentConfig::hash() const { return fmt::format("{:016x}", fnv1a(to_json().dump())); }

criteria::WitnessConfig ExperimentConfig::witness_config() const {
  criteria::WitnessConfig w;
  w.detection_tolerance = tolerance;
  w.phased = phased;
  w.single_mode_variant = single_mode_variant;
  w.eta.starts = eta_starts;
  w.eta.seed = 20170311 ^ seed;
  return w;
}

int Table::flagged() const {
  int k = 0;
  for (const auto& f : flags) k += !f.empty();
  return k;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  throw std::out_of_range("no column " + name);
}

std::vector<double> Table::values(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r[c]);
  return v;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------

ExperimentResult run_fig1(const ExperimentConfig& cfg) {
  auto w = cfg.witness_config();
  CacheGuard guard(cfg, w);
  const int n = cfg.n_particles;
  Scan scan({{"m", "1"}, {"Q", "1"}, {"xi_new", "1"}, {"eta", "1"}, {"varR", "1"}}, n + 1);
  scan_rows(scan, cfg.threads, [&](int i) {
    const double m = -0.5 * n + i;
    const auto st = dicke_state(n, m);
    const auto x = criteria::xi_new(st, w);
    scan.table.rows[i] = {m, criteria::linear_entropy_Q(st), x.value, x.details.value("eta", kNaN), x.term("varR")};
    if (auto f = flag_of(x); !f.empty()) scan.row_flags[i].push_back(f);
  });
  return {"fig1", scan.finish(), {}, {}};
}

ExperimentResult run_fig2(const ExperimentConfig& cfg) {
  auto w = cfg.witness_config();
  CacheGuard guard(cfg, w);
  const auto grid = cfg.g_grid.values();
  Scan scan({{"g/g_c", "1"},
             {"n_per_N", "photons per particle"},
             {"Sz", "hbar"},
             {"Q", "1"},
             {"xi_spin", "1"},
             {"xi_new", "1"},
             {"eta", "1"},
             {"varR", "1"},
             {"n_max", "photons"}},
            grid.size());
  scan_rows(scan, cfg.threads, [&](int i) {
    const auto gs = models::dicke_ground_state(dicke_params(cfg, grid[i]));
    const auto xs = criteria::xi_spin(gs.state, w);
    const auto xn = criteria::xi_new(gs.state, w);
    scan.table.rows[i] = {grid[i],       gs.n_per_N, gs.expSz, criteria::linear_entropy_Q(gs.state),
                          xs.value,      xn.value,   xn.details.value("eta", kNaN), xn.term("varR"),
                          double(gs.n_max)};
    if (auto f = flag_of(xn); !f.empty()) scan.row_flags[i].push_back(f);
  });
  return {"fig2", scan.finish(), {}, {}};
}

ExperimentResult run_fig3(const ExperimentConfig& cfg) {
  const auto w = cfg.witness_config();
  const auto grid = cfg.g_grid.values();
  Scan scan({{"g/g_c", "1"}, {"mu_SR", "1"}, {"mu_HZ", "1"}, {"mu_spin", "1"}, {"fock_tail", "1"}}, grid.size());
  scan_rows(scan, cfg.threads, [&](int i) {
    const auto gs = models::dicke_ground_state(dicke_params(cfg, grid[i]));
    const auto sr = criteria::mu_SR(gs.state, w);
    const auto hz = criteria::mu_HZ(gs.state, w);
    const auto sp = criteria::mu_spin(gs.state, w);
    scan.table.rows[i] = {grid[i], sr.value, hz.value, sp.value, gs.fock_tail};
    for (const auto* r : {&sr, &hz, &sp})
      if (auto f = flag_of(*r); !f.empty()) scan.row_flags[i].push_back(f);
  });
  return {"fig3", scan.finish(), {}, {}};
}

ExperimentResult run_fig4(const ExperimentConfig& cfg) {
  const auto grid = cfg.g_grid.values();
  Scan scan({{"g/g_c", "1"}, {"g2", "1"}, {"g3", "1"}, {"g4", "1"}, {"mandel_q_field", "photons"}}, grid.size());
  const criteria::ModePair modes{};
  scan_rows(scan, cfg.threads, [&](int i) {
    const auto gs = models::dicke_ground_state(dicke_params(cfg, grid[i]));
    const auto spin = spin_part(gs.state);
    scan.table.rows[i] = {grid[i], criteria::gn_wavefunction(spin, modes, 2), criteria::gn_wavefunction(spin, modes, 3),
                          criteria::gn_wavefunction(spin, modes, 4), criteria::mandel_q_field(gs.state)};
    if (gs.fock_tail > cfg.witness_config().fock_tail_tolerance) scan.row_flags[i].push_back("fock_tail");
  });
  return {"fig4", scan.finish(), {}, {}};
}

ExperimentResult run_fig5(const ExperimentConfig& cfg) {
  auto w = cfg.witness_config();
  CacheGuard guard(cfg, w);
  const int n = cfg.n_particles;
  const auto grid = cfg.u_grid.values();
  Scan scan({{"U/(N*omega_exc)", "1"}, {"m_star", "1"}, {"xi_new", "1"}, {"g2", "1"}, {"tie", "1"}}, grid.size());
  scan_rows(scan, cfg.threads, [&](int i) {
    // The axis is the total interaction energy per particle in units of the
    // excitation energy; the Sz^2 coefficient is U_int / N^2 with U_int = axis N w.
    models::BECParams p{n, cfg.omega_exc, grid[i] * cfg.omega_exc / n};
    const auto gs = models::bec_ground_state(p);
    const auto x = criteria::xi_new(gs.state, w);
    scan.table.rows[i] = {grid[i], gs.m_star, x.value, criteria::gn_wavefunction(gs.state, {}, 2), gs.tie ? 1.0 : 0.0};
    if (auto f = flag_of(x); !f.empty()) scan.row_flags[i].push_back(f);
  });
  return {"fig5", scan.finish(), {}, {}};
}

ExperimentResult run_fig6(const ExperimentConfig& cfg) {
  auto w = cfg.witness_config();
  CacheGuard guard(cfg, w);
  models::SuperradianceParams p;
  p.n_particles = cfg.full_scale ? 2000 : cfg.n_particles;
  p.radius = cfg.radius;
  p.lamb_shift = cfg.lamb_shift;
  p.seed = cfg.seed;
  const double k0 = p.k0();
  const int n = p.n_particles;

  auto positions = cfg.coincident ? std::vector<models::Position>(n, models::Position{0, 0, 0}) : models::sample_positions(p);
  const auto grid = cfg.t_grid.values();
  const auto traj = models::evolve(models::decay_kernel(positions, p.gamma, k0, p.lamb_shift),
                                   models::timed_dicke_initial(positions, k0), grid);

  Scan scan({{"t*gamma", "1"},
             {"sum_beta_sq", "1"},
             {"xi_new", "1"},
             {"mu_SR", "1"},
             {"mu_HZ", "1"},
             {"varR", "1"},
             {"eta", "1"},
             {"photon_sq", "1"}},
            grid.size());
  scan_rows(scan, cfg.threads, [&](int i) {
    const auto& s = traj.states[i];
    const auto mom = models::single_excitation_moments(s, cfg.phased);
    const auto x = criteria::xi_new(mom.spin, w);
    const auto sr = criteria::mu_SR(mom.joint, w);
    const auto hz = criteria::mu_HZ(mom.joint, w);
    scan.table.rows[i] = {grid[i],  s.atomic_population(),          x.value,
                          sr.value, hz.value,                       mom.spin.varR(),
                          x.details.value("eta", kNaN), std::norm(s.gamma_ph)};
    if (auto f = flag_of(x); !f.empty()) scan.row_flags[i].push_back(f);
  });

  // Calibration: all atoms at one point decay from the symmetric state at N gamma.
  Table cal;
  cal.columns = {{"t*N*gamma", "1"}, {"sum_beta_sq", "1"}, {"exp(-N*gamma*t)", "1"}};
  {
    const std::vector<models::Position> origin(n, models::Position{0, 0, 0});
    std::vector<double> tc;
    for (int i = 0; i <= 20; ++i) tc.push_back(0.25 * i / n);
    const auto ct = models::evolve(models::decay_kernel(origin, p.gamma, k0, false),
                                   models::timed_dicke_initial(origin, k0), tc);
    for (std::size_t i = 0; i < tc.size(); ++i) {
      cal.rows.push_back({tc[i] * n * p.gamma, ct.states[i].atomic_population(), std::exp(-n * p.gamma * tc[i])});
      cal.flags.emplace_back();
    }
  }

  ExperimentResult r{"fig6", scan.finish(), {}, {}};
  r.summary = {{"N", n}, {"evolution", traj.method}};
  r.extra.emplace_back("_calibration", std::move(cal));
  return r;
}

ExperimentResult run_random_scan(const ExperimentConfig& cfg) {
  auto w = cfg.witness_config();
  CacheGuard guard(cfg, w);
  Scan scan({{"Q", "1"}, {"xi_new", "1"}, {"detected", "1"}}, static_cast<std::size_t>(cfg.count));
  scan_rows(scan, cfg.threads, [&](int i) {
    const auto st = random_state(cfg.kind, cfg.n_particles, cfg.seed * 1000003ull + i, cfg.allow_large);
    const auto x = criteria::xi_new(st, w);
    scan.table.rows[i] = {criteria::linear_entropy_Q(st), x.value, x.detected() ? 1.0 : 0.0};
    if (auto f = flag_of(x); !f.empty()) scan.row_flags[i].push_back(f);
  });
  ExperimentResult r{"random-scan", scan.finish(), {}, {}};
  int det = 0;
  for (const auto& row : r.table.rows) det += row[2] == 1.0;
  r.summary = {{"count", cfg.count}, {"detected", det}, {"detection_rate", double(det) / std::max(1, cfg.count)}};
  return r;
}

std::vector<std::string> experiment_names() { return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "random-scan"}; }

ExperimentResult run(const ExperimentConfig& cfg) {
  static const std::map<std::string, Experiment> table{{"fig1", run_fig1}, {"fig2", run_fig2}, {"fig3", run_fig3},
                                                       {"fig4", run_fig4}, {"fig5", run_fig5}, {"fig6", run_fig6},
                                                       {"random-scan", run_random_scan}};
  auto it = table.find(cfg.experiment);
  if (it == table.end()) throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");
  return it->second(cfg);
}

// ---------------------------------------------------------------------------
// Output

std::string to_csv(const ExperimentResult& r, const Table& t, const ExperimentConfig& cfg) {
  std::string out = fmt::format("# superwit {} experiment={} config_hash={}\n", version(), r.name, cfg.hash());
  std::string units;
  for (const auto& c : t.columns) units += fmt::format("{}{}[{}]", units.empty() ? "" : " ", c.name, c.unit);
  out += "# units: " + units + "\n";
  out += fmt::format("# flagged_rows={}\n", t.flagged());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i].name;
  out += ",flag\n";
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    for (std::size_t i = 0; i < t.rows[k].size(); ++i) {
      const double v = t.rows[k][i];
      out += i ? "," : "";
      out += std::isfinite(v) ? fmt::format("{:.12g}", v) : (std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
    }
    out += "," + (k < t.flags.size() ? t.flags[k] : std::string()) + "\n";
  }
  return out;
}

std::string to_svg(const Table& t, const std::string& title) {
  constexpr double W = 640, H = 400, L = 60, R = 150, T = 30, B = 40;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& r : t.rows) {
    if (std::isfinite(r[0])) x0 = std::min(x0, r[0]), x1 = std::max(x1, r[0]);
    for (std::size_t c = 1; c < r.size(); ++c)
      if (std::isfinite(r[c])) y0 = std::min(y0, r[c]), y1 = std::max(y1, r[c]);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"18\">{}</text>\n"
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      W, H, L, title, L, T, W - L - R, H - T - B);
  s += fmt::format("<text x=\"{}\" y=\"{}\">{:.3g}</text><text x=\"{}\" y=\"{}\">{:.3g}</text>\n", L, H - B + 14, x0,
                   W - R - 30, H - B + 14, x1);
  s += fmt::format("<text x=\"4\" y=\"{}\">{:.3g}</text><text x=\"4\" y=\"{}\">{:.3g}</text>\n", H - B, y0, T + 8, y1);
  s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", (W - R + L) / 2, H - 6, t.columns[0].name);
  if (y0 < 0 && y1 > 0)
    s += fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#bbb\" stroke-dasharray=\"4\"/>\n", L,
                     W - R, py(0), py(0));
  for (std::size_t c = 1; c < t.columns.size(); ++c) {
    std::string pts;
    for (const auto& r : t.rows)
      if (std::isfinite(r[0]) && std::isfinite(r[c])) pts += fmt::format("{:.2f},{:.2f} ", px(r[0]), py(r[c]));
    const char* col = colors[(c - 1) % 8];
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", col, pts);
    s += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", W - R + 8, T + 14 * c, col, t.columns[c].name);
  }
  return s + "</svg>\n";
}

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    written.push_back(p);
  };
  put(cfg.out_dir / (r.name + ".csv"), to_csv(r, r.table, cfg));
  for (const auto& [suffix, t] : r.extra) put(cfg.out_dir / (r.name + suffix + ".csv"), to_csv(r, t, cfg));
  nlohmann::json echo = cfg.to_json();
  echo["config_hash"] = cfg.hash();
  echo["version"] = version();
  echo["summary"] = r.summary;
  echo["flagged_rows"] = r.table.flagged();
  put(cfg.out_dir / (r.name + ".config.json"), echo.dump(2) + "\n");
  if (cfg.svg) {
    put(cfg.out_dir / (r.name + ".svg"), to_svg(r.table, r.name));
    for (const auto& [suffix, t] : r.extra) put(cfg.out_dir / (r.name + suffix + ".svg"), to_svg(t, r.name + suffix));
  }
  return written;
}

// ---------------------------------------------------------------------------

nlohmann::json evaluate_witnesses(const CollectiveState& state, const std::vector<std::string>& names,
                                  const criteria::WitnessConfig& cfg) {
  nlohmann::json reports = nlohmann::json::object();
  for (const auto& name : names) {
    try {
      if (name == "xi_new") reports[name] = criteria::xi_new(state, cfg).to_json();
      else if (name == "xi_spin") reports[name] = criteria::xi_spin(state, cfg).to_json();
      else if (name == "Q") reports[name] = criteria::linear_entropy_Q(state);
      else if (name == "single_mode") reports[name] = criteria::single_mode_witness(field_part(state), cfg).to_json();
      else if (name == "mandel_q") reports[name] = criteria::mandel_q_field(state);
      else if (name == "mu_SR") reports[name] = criteria::mu_SR(state, cfg).to_json();
      else if (name == "mu_HZ") reports[name] = criteria::mu_HZ(state, cfg).to_json();
      else if (name == "mu_spin") reports[name] = criteria::mu_spin(state, cfg).to_json();
      else if (name == "g2" || name == "g3" || name == "g4")
        reports[name] = criteria::gn_wavefunction(spin_part(state), {}, name[1] - '0');
      else
        throw std::invalid_argument("unknown witness '" + name + "'");
    } catch (const std::invalid_argument& e) {
      if (e.what() == "unknown witness '" + name + "'") throw;
      reports[name] = {{"error", e.what()}};
    } catch (const std::domain_error& e) {
      reports[name] = {{"error", e.what()}};
    }
  }
  return {{"version", version()},
          {"config", cfg.to_json()},
          {"state", {{"space", to_string(state.space().type)}, {"N", state.space().n_particles}, {"n_max", state.space().n_max},
                     {"kind", state.is_pure() ? "pure" : "dm"}}},
          {"reports", reports}};
}

}  // namespace superwit::experiments
