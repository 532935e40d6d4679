#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "superwit/log.hpp"
#include "superwit/separable.hpp"

namespace superwit::separable {

namespace {
constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace

SeparableSampler::SeparableSampler(int n_particles, std::uint64_t seed, int min_components, int max_components)
    : n_(n_particles), min_c_(min_components), max_c_(max_components), state_(seed) {
  if (n_particles < 1) throw std::invalid_argument("SeparableSampler: N must be >= 1");
  if (min_components < 1 || max_components < min_components)
    throw std::invalid_argument("SeparableSampler: bad component range");
}

double SeparableSampler::uniform() { return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53; }

// Half of the components have independent uniformly distributed Bloch vectors;
// the other half cluster around a random common direction with a random spread,
// which reaches the extremes of <Sz> and <R> that independent sampling misses.
ProductState SeparableSampler::random_product() {
  ProductState p = ProductState::uniform(n_, 0.0);
  if (uniform() < 0.5) {
    for (int j = 0; j < n_; ++j) {
      p.theta[j] = std::acos(1.0 - 2.0 * uniform());
      p.phi[j] = 2.0 * kPi * uniform();
    }
  } else {
    const double t0 = std::acos(1.0 - 2.0 * uniform());
    const double f0 = 2.0 * kPi * uniform();
    const double spread = std::pow(uniform(), 2.0);
    for (int j = 0; j < n_; ++j) {
      p.theta[j] = t0 + spread * (2.0 * uniform() - 1.0);
      p.phi[j] = f0 + 2.0 * kPi * spread * (2.0 * uniform() - 1.0);
    }
    p = canonical(std::move(p));
  }
  return p;
}

SeparableMixture SeparableSampler::next_mixture() {
  const int k = min_c_ + static_cast<int>(uniform() * (max_c_ - min_c_ + 1));
  SeparableMixture m;
  double tot = 0.0;
  for (int c = 0; c < k; ++c) {
    m.components.push_back(random_product());
    const double e = -std::log(1.0 - uniform());  // Dirichlet(1) via normalised exponentials
    m.weights.push_back(e);
    tot += e;
  }
  for (auto& w : m.weights) w /= tot;
  return m;
}

SeparableSample SeparableSampler::next() {
  const auto m = next_mixture();
  SeparableSample s;
  s.moments = m.moments();
  s.varR = s.moments.varR();
  s.components = static_cast<int>(m.components.size());
  return s;
}

std::vector<SeparableSample> separable_sampler(int n_particles, long count, std::uint64_t seed) {
  SeparableSampler sampler(n_particles, seed);
  std::vector<SeparableSample> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, count)));
  for (long i = 0; i < count; ++i) out.push_back(sampler.next());
  return out;
}

std::optional<double> sampled_envelope(const std::vector<SeparableSample>& samples, double r, double s) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(samples.size());
  for (const auto& x : samples) {
    const auto& m = x.moments;
    pts.emplace_back(m.expSz, m.expR2 - 2.0 * r * m.expR + r * r);
  }
  if (pts.empty()) return std::nullopt;
  std::sort(pts.begin(), pts.end());
  if (s < pts.front().first || s > pts.back().first) return std::nullopt;
  // Lower hull (monotone chain).
  std::vector<std::pair<double, double>> h;
  for (const auto& p : pts) {
    while (h.size() >= 2) {
      const auto& a = h[h.size() - 2];
      const auto& b = h.back();
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross <= 0) h.pop_back();
      else break;
    }
    if (!h.empty() && h.back().first == p.first) continue;  // keep the lower of equal abscissae (sorted first)
    h.push_back(p);
  }
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (s >= h[i].first && s <= h[i + 1].first) {
      const double t = (s - h[i].first) / (h[i + 1].first - h[i].first);
      return h[i].second + t * (h[i + 1].second - h[i].second);
    }
  }
  return h.front().second;  // single hull point
}

// ---------------------------------------------------------------------------

EtaCache::EtaCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.empty() || !std::filesystem::exists(file_)) return;
  try {
    std::ifstream in(file_);
    const auto j = nlohmann::json::parse(in);
    for (const auto& [k, v] : j.at("entries").items()) entries_[k] = v;
  } catch (const std::exception& e) {
    warn(fmt::format("ignoring unreadable eta cache '{}': {}", file_.string(), e.what()));
    entries_.clear();
  }
}

std::string EtaCache::key(const EtaQuery& q) {
  return fmt::format("{}|{:.9f}|{:.9f}|{}|{:.3g}{}", q.n_particles, q.target_expR, q.target_expSz,
                     q.phased ? "phased" : "bare", q.tolerance, q.mean_constrained ? "|mc" : "");
}

std::optional<EtaResult> EtaCache::lookup(const EtaQuery& q) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key(q));
  if (it == entries_.end()) return std::nullopt;
  const auto& j = it->second;
  EtaResult r;
  r.eta = j.at("eta").get<double>();
  const auto& d = j.at("diagnostics");
  auto num = [&](const char* k) { return d.contains(k) && d[k].is_number() ? d[k].get<double>() : 0.0; };
  r.diagnostics.status = d.value("status", "") == "converged" ? BoundStatus::converged : BoundStatus::inconclusive;
  r.diagnostics.method = d.value("method", "") + " (cached)";
  r.diagnostics.starts = d.value("starts", 0);
  r.diagnostics.agreeing_starts = d.value("agreeing_starts", 0);
  r.diagnostics.best = num("best");
  r.diagnostics.second_best = num("second_best");
  r.diagnostics.primal_value = num("primal_value");
  r.diagnostics.dual_value = num("dual_value");
  r.diagnostics.duality_gap = num("duality_gap");
  r.diagnostics.multiplier = num("multiplier");
  r.diagnostics.constraint_residual = num("constraint_residual");
  return r;
}

void EtaCache::store(const EtaQuery& q, const EtaResult& r) {
  auto d = r.diagnostics.to_json();
  d.erase("argmin");
  std::lock_guard lock(mutex_);
  entries_[key(q)] = {{"eta", r.eta}, {"diagnostics", d}};
}

EtaResult EtaCache::get_or_compute(const EtaQuery& q, const OptimizerConfig& cfg) {
  if (auto hit = lookup(q)) return *hit;
  auto r = eta_lower_bound(q, cfg);
  store(q, r);
  return r;
}

void EtaCache::save() const {
  if (file_.empty()) return;
  nlohmann::json j{{"version", 1}, {"entries", nlohmann::json::object()}};
  {
    std::lock_guard lock(mutex_);
    for (const auto& [k, v] : entries_) j["entries"][k] = v;
  }
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_);
  if (!out) throw std::runtime_error(fmt::format("cannot write eta cache '{}'", file_.string()));
  out << j.dump(1) << '\n';
}

std::size_t EtaCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace superwit::separable
