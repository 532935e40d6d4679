#pragma once

// Figure experiments. Each experiment produces a Table in grid order; the
// CLI writes it as CSV (with a provenance header) and optionally as SVG.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "superwit/criteria.hpp"
#include "superwit/hilbert.hpp"

namespace superwit::experiments {

struct Grid {
  double lo = 0.0, hi = 1.0;
  int points = 11;

  std::vector<double> values() const;
  nlohmann::json to_json() const { return {{"lo", lo}, {"hi", hi}, {"points", points}}; }
};

struct ExperimentConfig {
  std::string experiment;
  int n_particles = 16;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  double tolerance = 1e-6;  // detection tolerance
  int threads = 1;
  bool phased = true;  // superradiance witnesses use timed-Dicke operators
  criteria::SingleModeVariant single_mode_variant = criteria::SingleModeVariant::central_moment;
  bool lamb_shift = false;
  bool full_scale = false;  // fig6 at N = 2000
  bool svg = false;
  std::string eta_cache;  // optional cache file
  int eta_starts = 32;

  // fig2-4: g / g_c
  Grid g_grid{0.0, 3.0, 31};
  double omega_eg = 1.0, omega_a = 1.0;
  // fig5: U / (N w_exc)
  Grid u_grid{0.0, 2.5, 51};
  double omega_exc = 1.0;
  // fig6: t gamma
  Grid t_grid{0.0, 6.0, 13};
  double radius = 5.0;
  bool coincident = false;  // calibration geometry: all atoms at the origin
  // random-scan
  int count = 2000;
  RandomStateKind kind = RandomStateKind::symmetric;
  bool allow_large = false;

  nlohmann::json to_json() const;
  /// 16 hex digits of a stable hash of to_json().
  std::string hash() const;
  criteria::WitnessConfig witness_config() const;
};

struct Column {
  std::string name;
  std::string unit;
};

struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> flags;  // per row; empty when clean

  int flagged() const;
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

struct ExperimentResult {
  std::string name;
  Table table;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, Table>> extra;  // additional tables (file suffix, table)
};

using Experiment = std::function<ExperimentResult(const ExperimentConfig&)>;

ExperimentResult run_fig1(const ExperimentConfig& cfg);
ExperimentResult run_fig2(const ExperimentConfig& cfg);
ExperimentResult run_fig3(const ExperimentConfig& cfg);
ExperimentResult run_fig4(const ExperimentConfig& cfg);
ExperimentResult run_fig5(const ExperimentConfig& cfg);
ExperimentResult run_fig6(const ExperimentConfig& cfg);
ExperimentResult run_random_scan(const ExperimentConfig& cfg);

/// Looks up an experiment by name ("fig1" ... "fig6", "random-scan").
ExperimentResult run(const ExperimentConfig& cfg);
std::vector<std::string> experiment_names();

/// CSV body with a '#' comment header (config hash, version, units).
std::string to_csv(const ExperimentResult& r, const Table& t, const ExperimentConfig& cfg);
/// Minimal SVG line plot of every column against the first.
std::string to_svg(const Table& t, const std::string& title);

/// Writes <name>.csv (+ extras), <name>.config.json and optional SVGs. Returns the paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const ExperimentConfig& cfg);

/// Runs fn(i) for i in [0, count) on `threads` workers; results land by index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Evaluates the named witnesses on a state ("xi_new", "xi_spin", "Q", "single_mode", "mandel_q",
/// "mu_SR", "mu_HZ", "mu_spin", "g2", "g3", "g4"). Returns a JSON report with config echo.
nlohmann::json evaluate_witnesses(const CollectiveState& state, const std::vector<std::string>& names,
                                  const criteria::WitnessConfig& cfg);

const char* version();

}  // namespace superwit::experiments
