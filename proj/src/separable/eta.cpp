// Minimisation of <(R - r)^2> over separable states at fixed <Sz>.
//
// Primal: multi-start augmented-Lagrangian L-BFGS over K-component mixtures of
// product states (weights through a softmax), followed by an exact weight
// polish: all locally optimal product states found by any start form a pool,
// and the best mixture of pool members with <Sz> = s is read off the lower
// convex hull of their (<Sz>, <(R - r)^2>) points.
//
// Dual: eta = max_lambda [lambda s + h(lambda)] with
// h(lambda) = min over product states of <(R - r)^2> - lambda <Sz>. h is
// concave, so the outer problem is a 1-D bisection on the subgradient
// s - <Sz>(argmin). Inner minimisers feed the same pool.
//
// The reported bound is min(primal, dual).

#include <algorithm>
#include <atomic>
#include <memory>
#include <numeric>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <ceres/ceres.h>
#include <fmt/core.h>
#include <glog/logging.h>

#include "poly.hpp"
#include "superwit/separable.hpp"

namespace superwit::separable {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double objective_scale(int n) {
  const double s = 0.5 * n;
  const double c = s * (s + 1.0) + 1.0;
  return c * c;
}

// Uniform double in [0, 1) from raw engine bits (portable across standard libraries).
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mutex;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------

class MixtureObjective : public ceres::FirstOrderFunction {
public:
  int n = 0, k = 1;
  double r = 0, s = 0, scale = 1;
  double mu = 0, nu = 0, lambda = 0;
  const std::vector<double>* phase = nullptr;
  std::atomic<long>* counter = nullptr;

  int NumParameters() const override { return k * 2 * n + (k > 1 ? k : 0); }

  std::vector<double> weights(const double* x) const {
    if (k == 1) return {1.0};
    const double* l = x + k * 2 * n;
    const double mx = *std::max_element(l, l + k);
    std::vector<double> w(k);
    double tot = 0.0;
    for (int i = 0; i < k; ++i) tot += (w[i] = std::exp(l[i] - mx));
    for (auto& v : w) v /= tot;
    return w;
  }

  ProductState component(const double* x, int c) const {
    const double* b = x + c * 2 * n;
    ProductState p{std::vector<double>(b, b + n), std::vector<double>(b + n, b + 2 * n), {}};
    if (phase) p.phase = *phase;
    return p;
  }

  bool Evaluate(const double* x, double* cost, double* grad) const override {
    if (counter) counter->fetch_add(1, std::memory_order_relaxed);
    const auto w = weights(x);
    std::vector<ProductMomentGradients> g(k);
    double mix_sz = 0.0;
    std::vector<double> e(k);
    for (int c = 0; c < k; ++c) {
      if (grad) {
        g[c] = product_moments_with_gradient(component(x, c));
      } else {
        g[c].value = product_moments(component(x, c));
      }
      const auto& m = g[c].value;
      e[c] = m.expR2 - 2.0 * r * m.expR + r * r - lambda * m.expSz;
      mix_sz += w[c] * m.expSz;
    }
    const double cr = (mix_sz - s) / n;
    double f = 0.0;
    for (int c = 0; c < k; ++c) f += w[c] * e[c];
    *cost = f / scale + nu * cr + mu * cr * cr;
    if (!std::isfinite(*cost)) return false;
    if (!grad) return true;

    const double pc = (nu + 2.0 * mu * cr) / n;
    std::vector<double> dw(k);
    for (int c = 0; c < k; ++c) {
      const auto& gc = g[c];
      double* out = grad + c * 2 * n;
      for (int i = 0; i < 2 * n; ++i)
        out[i] = w[c] * ((gc.dR2[i] - 2.0 * r * gc.dR[i] - lambda * gc.dSz[i]) / scale + pc * gc.dSz[i]);
      dw[c] = e[c] / scale + pc * gc.value.expSz;
    }
    if (k > 1) {
      double avg = 0.0;
      for (int c = 0; c < k; ++c) avg += w[c] * dw[c];
      for (int c = 0; c < k; ++c) grad[k * 2 * n + c] = w[c] * (dw[c] - avg);
    }
    return true;
  }
};

void quiet_solver_logging() {
  static std::once_flag once;
  std::call_once(once, [] { FLAGS_minloglevel = std::max(FLAGS_minloglevel, 2); });
}

void minimize(ceres::FirstOrderFunction* obj, std::vector<double>& x, int max_iter) {
  ceres::GradientProblem problem(obj);  // takes ownership
  ceres::GradientProblemSolver::Options o;
  o.line_search_direction_type = ceres::LBFGS;
  o.max_num_iterations = max_iter;
  o.function_tolerance = 1e-15;
  o.gradient_tolerance = 1e-13;
  o.parameter_tolerance = 1e-15;
  o.logging_type = ceres::SILENT;
  o.minimizer_progress_to_stdout = false;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(o, problem, x.data(), &summary);
}

// ---------------------------------------------------------------------------

struct PoolPoint {
  ProductState state;
  double sz = 0, f = 0;  // <Sz>, <(R - r)^2>
};

PoolPoint make_point(ProductState st, double r) {
  st = canonical(std::move(st));
  const auto m = product_moments(st);
  return {std::move(st), m.expSz, m.expR2 - 2.0 * r * m.expR + r * r};
}

struct HullValue {
  double value = kInf;
  int i = -1, j = -1;
  double wi = 1.0;
};

// Best mixture of at most two pool points with <Sz> = s (up to feas).
HullValue hull_at(const std::vector<PoolPoint>& pts, double s, double feas) {
  HullValue best;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::abs(pts[i].sz - s) <= feas && pts[i].f < best.value) best = {pts[i].f, static_cast<int>(i), -1, 1.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].sz < s)) continue;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (!(pts[j].sz > s)) continue;
      const double wi = (pts[j].sz - s) / (pts[j].sz - pts[i].sz);
      const double v = wi * pts[i].f + (1.0 - wi) * pts[j].f;
      if (v < best.value) best = {v, static_cast<int>(i), static_cast<int>(j), wi};
    }
  }
  return best;
}

SeparableMixture mixture_of(const std::vector<PoolPoint>& pts, const HullValue& h) {
  SeparableMixture m;
  if (h.i < 0) return m;
  m.components.push_back(pts[h.i].state);
  m.weights.push_back(h.wi);
  if (h.j >= 0) {
    m.components.push_back(pts[h.j].state);
    m.weights.push_back(1.0 - h.wi);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Starting points

ProductState random_product(int n, std::mt19937_64& rng) {
  ProductState p = ProductState::uniform(n, 0.0);
  for (int j = 0; j < n; ++j) {
    p.theta[j] = std::acos(1.0 - 2.0 * unit(rng));
    p.phi[j] = 2.0 * kPi * unit(rng);
  }
  return p;
}

ProductState jitter(ProductState p, std::mt19937_64& rng, double amp) {
  for (std::size_t j = 0; j < p.theta.size(); ++j) {
    p.theta[j] += amp * (2.0 * unit(rng) - 1.0);
    p.phi[j] += amp * (2.0 * unit(rng) - 1.0);
  }
  return p;
}

double acs_theta(int n, double s) { return std::acos(std::clamp(2.0 * s / n, -1.0, 1.0)); }

// Product state clustered around a random direction with a random spread.
ProductState clustered_product(int n, std::mt19937_64& rng) {
  const double t0 = std::acos(1.0 - 2.0 * unit(rng));
  const double f0 = 2.0 * kPi * unit(rng);
  const double spread = unit(rng) * unit(rng);
  ProductState p = ProductState::uniform(n, t0, f0);
  return jitter(std::move(p), rng, spread);
}

std::vector<ProductState> seed_components(int index, int n, int k, double s, std::mt19937_64& rng) {
  const double ts = acs_theta(n, s);
  const int kf = std::clamp(static_cast<int>(std::floor(s + 0.5 * n)), 0, n);
  const int kc = std::min(n, kf + 1);
  const auto g = ProductState::uniform(n, kPi);
  const auto e = ProductState::uniform(n, 0.0);
  auto acs = [&](double t) { return ProductState::uniform(n, std::clamp(t, 0.0, kPi)); };
  std::vector<ProductState> c;
  switch (index) {
    case 0: c = {acs(ts), g, e}; break;
    case 1: c = {ProductState::k_excited(n, kf), ProductState::k_excited(n, kc), g}; break;
    case 2: c = {g, e, acs(ts)}; break;
    case 3: c = {jitter(acs(ts), rng, 1e-2), e, g}; break;
    case 4:
    case 5:
    case 6:
    case 7: {
      const double d = 0.05 * std::pow(3.0, index - 4);  // 0.05 .. 1.35
      c = {jitter(acs(ts - d), rng, 1e-3), jitter(acs(ts + d), rng, 1e-3), g};
      break;
    }
    case 8: {
      auto alt = acs(ts);
      for (int j = 1; j < n; j += 2) alt.phi[j] = kPi;
      c = {jitter(alt, rng, 1e-2), jitter(acs(ts), rng, 1e-2), g};
      break;
    }
    case 9: c = {jitter(ProductState::k_excited(n, kf), rng, 0.05), jitter(acs(ts), rng, 0.05), e}; break;
    default:
      for (int i = 0; i < 3; ++i) c.push_back(index % 2 ? clustered_product(n, rng) : random_product(n, rng));
  }
  c.resize(k, g);
  return c;
}
std::vector<double> pack(const std::vector<ProductState>& comps, int n, int k) {
  std::vector<double> x(k * 2 * n + (k > 1 ? k : 0), 0.0);
  for (int c = 0; c < k; ++c) {
    std::copy(comps[c].theta.begin(), comps[c].theta.end(), x.begin() + c * 2 * n);
    std::copy(comps[c].phi.begin(), comps[c].phi.end(), x.begin() + c * 2 * n + n);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Block-reduced inner search. The minimisers of <(R - r)^2> - lambda <Sz> over
// product states seen so far are one or two blocks of identical sites. With the
// block sizes fixed, each evaluation costs O(log N), so a sweep over sizes is
// cheap and hands the full-space search good seeds.

class BlockObjective : public ceres::FirstOrderFunction {
public:
  std::vector<int> sizes;
  double r = 0, lambda = 0, scale = 1;

  int NumParameters() const override { return 2 * static_cast<int>(sizes.size()); }

  double linear(const ProductMoments& m) const { return (m.expR2 - 2.0 * r * m.expR - lambda * m.expSz) / scale; }

  bool Evaluate(const double* x, double* cost, double* grad) const override {
    const int nb = static_cast<int>(sizes.size());
    std::vector<Poly> full(nb), less(nb);  // P^n and P^(n-1)
    Poly g = unit_poly();
    for (int b = 0; b < nb; ++b) {
      const Poly site = site_poly(x[2 * b], x[2 * b + 1], 0.0);
      less[b] = power(site, sizes[b] - 1);
      full[b] = mul(less[b], site);
      g = mul(g, full[b]);
    }
    *cost = linear(moments_from(g)) + r * r / scale;
    if (!std::isfinite(*cost)) return false;
    if (!grad) return true;
    for (int b = 0; b < nb; ++b) {
      Poly rest = less[b];
      for (int o = 0; o < nb; ++o)
        if (o != b) rest = mul(rest, full[o]);
      for (auto& v : rest) v *= static_cast<double>(sizes[b]);
      grad[2 * b] = linear(moments_from(mul(site_dtheta(x[2 * b], x[2 * b + 1], 0.0), rest)));
      grad[2 * b + 1] = linear(moments_from(mul(site_dphi(x[2 * b], x[2 * b + 1], 0.0), rest)));
    }
    return true;
  }
};

// Full product state from block angles; position phases are absorbed into phi.
ProductState expand_blocks(const std::vector<int>& sizes, const std::vector<double>& x,
                           const std::vector<double>& phase) {
  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  ProductState p = ProductState::uniform(n, 0.0);
  int j = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b)
    for (int i = 0; i < sizes[b]; ++i, ++j) {
      p.theta[j] = x[2 * b];
      p.phi[j] = x[2 * b + 1] - (phase.empty() ? 0.0 : phase[j]);
    }
  if (!phase.empty()) p.phase = phase;
  return canonical(std::move(p));
}

std::vector<ProductState> block_seeds(int n, double r, double lambda, double scale, const std::vector<double>& phase,
                                      std::mt19937_64& rng, int count, int max_iter) {
  std::vector<std::pair<double, ProductState>> found;
  auto run = [&](std::vector<int> sizes, std::vector<double> x) {
    auto make = [&] {
      auto* o = new BlockObjective;
      o->sizes = sizes;
      o->r = r;
      o->lambda = lambda;
      o->scale = scale;
      return o;
    };
    minimize(make(), x, max_iter);
    std::unique_ptr<BlockObjective> probe(make());
    double v = kInf;
    probe->Evaluate(x.data(), &v, nullptr);
    if (std::isfinite(v)) found.emplace_back(v, expand_blocks(sizes, x, phase));
  };

  // one block: coarse scan, then polish
  std::unique_ptr<BlockObjective> scan(new BlockObjective);
  scan->sizes = {n};
  scan->r = r;
  scan->lambda = lambda;
  scan->scale = scale;
  double best_t = kPi, best_v = kInf;
  for (int i = 0; i <= 64; ++i) {
    const double x[2] = {kPi * i / 64.0, 0.0};
    double v;
    scan->Evaluate(x, &v, nullptr);
    if (v < best_v) best_v = v, best_t = x[0];
  }
  run({n}, {best_t, 0.0});

  // two blocks, block sizes on a roughly geometric ladder
  std::vector<int> ladder;
  for (int m = 1; m <= n / 2; m = std::max(m + 1, static_cast<int>(std::lround(m * 1.5)))) ladder.push_back(m);
  for (int m : ladder) {
    for (double off : {0.0, kPi}) run({m, n - m}, {std::clamp(best_t + 0.7, 0.0, kPi), off, best_t, 0.0});
    run({m, n - m}, {std::clamp(best_t - 0.7, 0.0, kPi), 0.0, best_t, 0.0});
    run({m, n - m}, {kPi * unit(rng), 2.0 * kPi * unit(rng), kPi * unit(rng), 0.0});
  }

  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ProductState> out;
  double last = kInf;
  for (auto& [v, st] : found) {
    if (static_cast<int>(out.size()) >= count) break;
    if (std::abs(v - last) <= 1e-12 * std::max(1.0, std::abs(v))) continue;  // same optimum
    out.push_back(std::move(st));
    last = v;
  }
  return out;
}

struct StartResult {
  double value = kInf;
  double lambda = 0.0;
  std::vector<PoolPoint> points;
};

struct Context {
  const EtaQuery& q;
  const OptimizerConfig& cfg;
  std::vector<double> phase;
  double scale;
  double feas;
  std::atomic<long> evaluations{0};

  MixtureObjective* objective(int k) {
    auto* o = new MixtureObjective;
    o->n = q.n_particles;
    o->k = k;
    o->r = q.target_expR;
    o->s = q.target_expSz;
    o->scale = scale;
    o->phase = phase.empty() ? nullptr : &phase;
    o->counter = &evaluations;
    return o;
  }
};

StartResult run_start(Context& ctx, int index, int k, bool allow_mixing) {
  const int n = ctx.q.n_particles;
  auto rng = stream(ctx.cfg.seed, static_cast<std::uint64_t>(index));
  const auto comps = seed_components(index, n, k, ctx.q.target_expSz, rng);
  std::vector<double> x = pack(comps, n, k);

  double mu = 10.0, nu = 0.0, cr = 0.0;
  for (int stage = 0; stage < 10; ++stage) {
    auto* o = ctx.objective(k);
    o->mu = mu;
    o->nu = nu;
    minimize(o, x, ctx.cfg.max_iterations);
    auto* probe = ctx.objective(k);
    double mix_sz = 0.0;
    const auto w = probe->weights(x.data());
    for (int c = 0; c < k; ++c) mix_sz += w[c] * product_moments(probe->component(x.data(), c)).expSz;
    delete probe;
    cr = (mix_sz - ctx.q.target_expSz) / n;
    nu += 2.0 * mu * cr;
    if (std::abs(cr) <= 0.01 * ctx.q.tolerance && stage >= 1) break;
    mu = std::min(mu * 10.0, 1e7);
  }

  StartResult res;
  res.lambda = -nu * ctx.scale / n;
  auto* probe = ctx.objective(k);
  for (int c = 0; c < k; ++c) res.points.push_back(make_point(probe->component(x.data(), c), ctx.q.target_expR));
  delete probe;
  // Per-start scores accept the user tolerance; the final pool hull does not.
  const double feas = ctx.q.tolerance * n;
  if (allow_mixing) {
    res.value = hull_at(res.points, ctx.q.target_expSz, feas).value;
  } else {
    for (const auto& p : res.points)
      if (std::abs(p.sz - ctx.q.target_expSz) <= feas) res.value = std::min(res.value, p.f);
  }
  return res;
}

// h(lambda) by multi-start over single product states. Returns the best point.
PoolPoint inner_solve(Context& ctx, double lambda, const std::vector<PoolPoint>& pool, int call_index,
                      std::vector<PoolPoint>& found, int n_random, int* agreeing = nullptr, double tol = 0.0) {
  const int n = ctx.q.n_particles;
  const double s = ctx.q.target_expSz;
  std::vector<ProductState> seeds;
  // Warm starts: the pool points best for this lambda.
  std::vector<int> order(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pool[a].f - lambda * pool[a].sz < pool[b].f - lambda * pool[b].sz;
  });
  for (std::size_t i = 0; i < std::min<std::size_t>(6, order.size()); ++i) seeds.push_back(pool[order[i]].state);
  auto rng = stream(ctx.cfg.seed ^ 0xd1a1ull, static_cast<std::uint64_t>(call_index));
  seeds.push_back(ProductState::uniform(n, acs_theta(n, s)));
  seeds.push_back(ProductState::uniform(n, kPi));
  seeds.push_back(ProductState::uniform(n, 0.0));
  for (auto& b : block_seeds(n, ctx.q.target_expR, lambda, ctx.scale, ctx.phase, rng, 4, ctx.cfg.max_iterations))
    seeds.push_back(std::move(b));
  for (int i = 0; i < n_random; ++i) seeds.push_back(i % 2 ? clustered_product(n, rng) : random_product(n, rng));

  std::vector<PoolPoint> local(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), ctx.cfg.threads, [&](int i) {
    std::vector<double> x = pack({seeds[i]}, n, 1);
    auto* o = ctx.objective(1);
    o->lambda = lambda;
    minimize(o, x, ctx.cfg.max_iterations);
    auto* probe = ctx.objective(1);
    local[i] = make_point(probe->component(x.data(), 0), ctx.q.target_expR);
    delete probe;
  });
  int best = 0;
  for (std::size_t i = 1; i < local.size(); ++i)
    if (local[i].f - lambda * local[i].sz < local[best].f - lambda * local[best].sz) best = static_cast<int>(i);
  if (agreeing) {
    const double h = local[best].f - lambda * local[best].sz;
    *agreeing = 0;
    for (const auto& p : local)
      if (p.f - lambda * p.sz <= h + tol) ++*agreeing;
  }
  for (auto& p : local) found.push_back(p);
  return local[best];
}

nlohmann::json product_json(const ProductState& p) {
  nlohmann::json j{{"theta", p.theta}, {"phi", p.phi}};
  if (!p.phase.empty()) j["phase"] = p.phase;
  return j;
}

EtaResult solve(const EtaQuery& q, const OptimizerConfig& cfg, bool allow_mixing) {
  q.validate();
  quiet_solver_logging();
  if (cfg.starts < 1) throw std::invalid_argument("OptimizerConfig: starts must be >= 1");
  if (cfg.components < 1 || cfg.components > 3)
    throw std::invalid_argument("OptimizerConfig: components must be 1, 2 or 3");
  const int n = q.n_particles;
  Context ctx{q, cfg, {}, objective_scale(n), 1e-10 * std::max(1, n)};
  if (q.phased) {
    ctx.phase.resize(n);
    for (int j = 0; j < n; ++j) ctx.phase[j] = 2.0 * kPi * j / n;
  }
  const int k = allow_mixing ? cfg.components : 1;

  std::vector<StartResult> starts(cfg.starts);
  parallel_for(cfg.starts, cfg.threads, [&](int i) { starts[i] = run_start(ctx, i, k, allow_mixing); });

  EtaResult out;
  auto& d = out.diagnostics;
  d.starts = cfg.starts;
  int best_idx = 0;
  for (int i = 1; i < cfg.starts; ++i)
    if (starts[i].value < starts[best_idx].value) best_idx = i;
  d.best = starts[best_idx].value;
  d.second_best = kInf;
  for (int i = 0; i < cfg.starts; ++i)
    if (i != best_idx) d.second_best = std::min(d.second_best, starts[i].value);
  const double tol_abs = cfg.gap_tolerance * std::max(1.0, std::abs(d.best));
  for (const auto& st : starts)
    if (st.value <= d.best + tol_abs) ++d.agreeing_starts;
  d.multiplier = starts[best_idx].lambda;
  for (const auto& st : starts) d.start_values.push_back(st.value);

  if (!allow_mixing) {
    d.method = "penalty-pure-product";
    d.primal_value = d.best;
    d.dual_value = d.best;
    for (const auto& p : starts[best_idx].points)
      if (std::abs(p.sz - q.target_expSz) <= q.tolerance * n && p.f == d.best) {
        d.argmin = SeparableMixture{{p.state}, {1.0}};
        d.constraint_residual = std::abs(p.sz - q.target_expSz);
      }
    d.status = (d.agreeing_starts >= 2 && std::isfinite(d.best)) ? BoundStatus::converged : BoundStatus::inconclusive;
    d.evaluations = ctx.evaluations.load();
    out.eta = d.best;
    return out;
  }

  std::vector<PoolPoint> pool;
  for (auto& st : starts)
    for (auto& p : st.points) pool.push_back(p);
  auto primal = [&] { return hull_at(pool, q.target_expSz, ctx.feas); };

  double dual_best = -kInf;
  double lambda_best = d.multiplier;
  int dual_agreeing = 0;
  int calls = 0;
  // Bisection on the multiplier, then a full multi-start confirmation at the best one.
  // A confirmation that lowers h leaves the pool short of the matching partner point,
  // so the bisection is repeated from there.
  for (int round = 0; round < 3 && cfg.lagrangian_refinement; ++round) {
    const double s = q.target_expSz;
    auto eval = [&](double lam) {
      std::vector<PoolPoint> found;
      const PoolPoint p = inner_solve(ctx, lam, pool, calls++, found, 2);
      pool.insert(pool.end(), found.begin(), found.end());
      const double g = lam * s + (p.f - lam * p.sz);
      if (g > dual_best) {
        dual_best = g;
        lambda_best = lam;
      }
      return p.sz;
    };
    auto gap_small = [&] { return primal().value - dual_best <= tol_abs; };

    const double lam0 = round == 0 ? d.multiplier : lambda_best;
    if (round > 0) dual_best = -kInf;
    const double sz0 = eval(lam0);
    if (std::abs(sz0 - s) > ctx.feas && !gap_small()) {
      const double dir = sz0 < s ? 1.0 : -1.0;  // larger lambda favours larger <Sz>
      double step = std::max(1e-3 * std::abs(lam0), 1e-3 * ctx.scale / n);
      // lo: argmin has <Sz> < s; hi: argmin has <Sz> >= s
      double lo = lam0, hi = lam0;
      bool bracketed = false;
      for (int it = 0; it < 40 && !bracketed && !gap_small(); ++it) {
        const double lam = lam0 + dir * step;
        const bool below = eval(lam) < s;
        if (below) lo = lam; else hi = lam;
        bracketed = dir > 0 ? !below : below;
        step *= 4.0;
      }
      if (bracketed) {
        for (int it = 0; it < 50 && !gap_small(); ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          const double sz = eval(mid);
          (sz < s ? lo : hi) = mid;
        }
      }
    }

    std::vector<PoolPoint> found;
    const PoolPoint p = inner_solve(ctx, lambda_best, pool, (1 << 20) + round, found, cfg.starts, &dual_agreeing, tol_abs);
    pool.insert(pool.end(), found.begin(), found.end());
    // The warm-started search can only lower h, so this replaces the earlier estimate.
    dual_best = lambda_best * q.target_expSz + (p.f - lambda_best * p.sz);
    if (std::abs(primal().value - dual_best) <= 10.0 * tol_abs) break;
  }
  d.dual_agreeing = dual_agreeing;

  const HullValue hv = primal();
  d.primal_value = hv.value;
  d.dual_value = cfg.lagrangian_refinement ? dual_best : hv.value;
  d.multiplier = lambda_best;
  d.duality_gap = d.primal_value - d.dual_value;
  d.argmin = mixture_of(pool, hv);
  if (!d.argmin.components.empty())
    d.constraint_residual = std::abs(d.argmin.moments().expSz - q.target_expSz);
  d.method = cfg.lagrangian_refinement ? "augmented-lagrangian+dual" : "augmented-lagrangian";
  d.evaluations = ctx.evaluations.load();

  const bool gap_ok = !cfg.lagrangian_refinement || std::abs(d.duality_gap) <= 10.0 * tol_abs;
  d.status = (std::max(d.agreeing_starts, d.dual_agreeing) >= 2 && gap_ok && std::isfinite(hv.value)) ? BoundStatus::converged
                                                                            : BoundStatus::inconclusive;
  out.eta = std::min(d.primal_value, d.dual_value);
  if (!std::isfinite(out.eta)) out.eta = d.dual_value;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void EtaQuery::validate() const {
  if (n_particles < 1) throw std::domain_error("eta: N must be >= 1");
  const double half = 0.5 * n_particles;
  if (!std::isfinite(target_expSz) || target_expSz < -half - 1e-12 || target_expSz > half + 1e-12)
    throw std::domain_error(
        fmt::format("eta: <Sz> = {} is not reachable by any state of N = {} (range [-{}, {}])", target_expSz,
                    n_particles, half, half));
  const double rmax = phased ? static_cast<double>(n_particles) * n_particles
                             : 0.25 * (n_particles + 1.0) * (n_particles + 1.0);
  if (!std::isfinite(target_expR) || target_expR < -1e-12 || target_expR > rmax + 1e-9)
    throw std::domain_error(fmt::format("eta: <R> = {} outside the spectrum of R [0, {}]", target_expR, rmax));
  if (!(tolerance > 0.0)) throw std::domain_error("eta: tolerance must be positive");
}

nlohmann::json OptimizerConfig::to_json() const {
  return {{"starts", starts},
          {"components", components},
          {"seed", seed},
          {"max_iterations", max_iterations},
          {"gap_tolerance", gap_tolerance},
          {"lagrangian_refinement", lagrangian_refinement}};
}

std::string to_string(BoundStatus s) { return s == BoundStatus::converged ? "converged" : "inconclusive"; }

nlohmann::json EtaDiagnostics::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : argmin.components) comps.push_back(product_json(c));
  return {{"status", to_string(status)},
          {"method", method},
          {"starts", starts},
          {"agreeing_starts", agreeing_starts},
          {"dual_agreeing", dual_agreeing},
          {"best", num(best)},
          {"second_best", num(second_best)},
          {"primal_value", num(primal_value)},
          {"dual_value", num(dual_value)},
          {"duality_gap", num(duality_gap)},
          {"multiplier", num(multiplier)},
          {"constraint_residual", num(constraint_residual)},
          {"evaluations", evaluations},
          {"start_values", [&] {
             nlohmann::json a = nlohmann::json::array();
             for (double v : start_values) a.push_back(num(v));
             return a;
           }()},
          {"argmin", {{"weights", argmin.weights}, {"components", comps}}}};
}

EtaResult eta_lower_bound(const EtaQuery& query, const OptimizerConfig& config) {
  if (query.mean_constrained) return eta_mean_constrained(query, config);
  return solve(query, config, true);
}

EtaResult eta_pure_products(const EtaQuery& query, const OptimizerConfig& config) {
  return solve(query, config, false);
}

EtaResult eta_mean_constrained(const EtaQuery& query, const OptimizerConfig& config, int steps) {
  query.validate();
  EtaQuery base = query;
  base.mean_constrained = false;
  const int n = query.n_particles;
  const double rmax = query.phased ? static_cast<double>(n) * n : 0.25 * (n + 1.0) * (n + 1.0);
  bool all_converged = true;
  auto g = [&](double rp, EtaResult* keep) {
    EtaQuery q = base;
    q.target_expR = rp;
    EtaResult e = solve(q, config, true);
    all_converged = all_converged && e.diagnostics.status == BoundStatus::converged;
    const double v = e.eta - (rp - query.target_expR) * (rp - query.target_expR);
    if (keep) *keep = std::move(e);
    return v;
  };
  // golden-section on a concave function
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = rmax;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = g(x1, nullptr), f2 = g(x2, nullptr);
  for (int it = 0; it < steps; ++it) {
    if (f1 < f2) {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = g(x2, nullptr);
    } else {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = g(x1, nullptr);
    }
  }
  EtaResult best;
  const double rp = f1 >= f2 ? x1 : x2;
  double v = g(rp, &best);
  // the shifted mean itself is a feasible point of the scan (r' = r)
  EtaResult at_r;
  const double v0 = g(query.target_expR, &at_r);
  if (v0 > v) v = v0, best = std::move(at_r);
  best.eta = std::max(0.0, v);
  best.diagnostics.method += "+mean-scan";
  best.diagnostics.multiplier = 2.0 * (rp - query.target_expR);
  if (!all_converged) best.diagnostics.status = BoundStatus::inconclusive;
  return best;
}

}  // namespace superwit::separable
