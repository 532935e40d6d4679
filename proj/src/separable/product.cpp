// Product-state moments of R = S+ S- and Sz via a truncated generating function.
//
// For a product state, <S+^a S-^b Sz^c> / (a! b! c!) is the coefficient of
// x^a y^b z^c in prod_j (sum over single-site monomials), truncated at
// a, b <= 2 and c <= 1. Then
//   R   = G[1,1,0]
//   R^2 = S+^2 S-^2 - 2 R Sz + 2 R = 4 G[2,2,0] - 2 G[1,1,1] + 2 G[1,1,0]
//   Sz  = G[0,0,1]

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "poly.hpp"
#include "superwit/separable.hpp"

namespace superwit::separable {

namespace {

constexpr double kPi = std::numbers::pi;

void check_lengths(const ProductState& p) {
  const auto n = p.theta.size();
  if (n == 0) throw std::invalid_argument("ProductState: empty");
  if (p.phi.size() != n) throw std::invalid_argument("ProductState: theta and phi lengths differ");
  if (!p.phase.empty() && p.phase.size() != n)
    throw std::invalid_argument("ProductState: phase tags must have length N");
}

double phase_of(const ProductState& p, std::size_t j) { return p.phase.empty() ? 0.0 : p.phase[j]; }

}  // namespace

// ---------------------------------------------------------------------------
// Site polynomials

Poly site_poly(double theta, double phi, double chi) {
  Poly g{};
  const double c = std::cos(theta), s = std::sin(theta);
  const double p = 0.5 * (1.0 + c);
  const cplx a = std::polar(0.5 * s, -(phi + chi));
  const cplx ab = std::conj(a);
  g[pidx(0, 0, 0)] = 1.0;
  g[pidx(0, 0, 1)] = 0.5 * c;
  g[pidx(1, 0, 0)] = ab;
  g[pidx(0, 1, 0)] = a;
  g[pidx(1, 0, 1)] = -0.5 * ab;
  g[pidx(0, 1, 1)] = 0.5 * a;
  g[pidx(1, 1, 0)] = p;
  g[pidx(1, 1, 1)] = 0.5 * p;
  return g;
}

Poly site_dtheta(double theta, double phi, double chi) {
  Poly g{};
  const double c = std::cos(theta), s = std::sin(theta);
  const cplx da = std::polar(0.5 * c, -(phi + chi));
  const cplx dab = std::conj(da);
  g[pidx(0, 0, 1)] = -0.5 * s;
  g[pidx(1, 0, 0)] = dab;
  g[pidx(0, 1, 0)] = da;
  g[pidx(1, 0, 1)] = -0.5 * dab;
  g[pidx(0, 1, 1)] = 0.5 * da;
  g[pidx(1, 1, 0)] = -0.5 * s;
  g[pidx(1, 1, 1)] = -0.25 * s;
  return g;
}

Poly site_dphi(double theta, double phi, double chi) {
  Poly g{};
  const cplx a = std::polar(0.5 * std::sin(theta), -(phi + chi));
  const cplx da = cplx(0.0, -1.0) * a;
  const cplx dab = std::conj(da);
  g[pidx(1, 0, 0)] = dab;
  g[pidx(0, 1, 0)] = da;
  g[pidx(1, 0, 1)] = -0.5 * dab;
  g[pidx(0, 1, 1)] = 0.5 * da;
  return g;
}

Poly mul_site(const Poly& acc, const Poly& site) {
  Poly out{};
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2; ++b)
      for (int c = 0; c <= 1; ++c) {
        const cplx v = acc[pidx(a, b, c)];
        if (v == cplx(0.0)) continue;
        for (int da = 0; da <= 1 && a + da <= 2; ++da)
          for (int db = 0; db <= 1 && b + db <= 2; ++db)
            for (int dc = 0; dc <= 1 && c + dc <= 1; ++dc)
              out[pidx(a + da, b + db, c + dc)] += v * site[pidx(da, db, dc)];
      }
  return out;
}

Poly mul(const Poly& x, const Poly& y) {
  Poly out{};
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2; ++b)
      for (int c = 0; c <= 1; ++c) {
        const cplx v = x[pidx(a, b, c)];
        if (v == cplx(0.0)) continue;
        for (int a2 = 0; a + a2 <= 2; ++a2)
          for (int b2 = 0; b + b2 <= 2; ++b2)
            for (int c2 = 0; c + c2 <= 1; ++c2) out[pidx(a + a2, b + b2, c + c2)] += v * y[pidx(a2, b2, c2)];
      }
  return out;
}

Poly unit_poly() {
  Poly u{};
  u[pidx(0, 0, 0)] = 1.0;
  return u;
}

// Coefficient of the three target monomials in d * W where d has single-site support.
static void targets_of_product(const Poly& d, const Poly& w, double& r, double& r2, double& sz) {
  auto coef = [&](int a, int b, int c) {
    cplx acc = 0.0;
    for (int da = 0; da <= std::min(a, 1); ++da)
      for (int db = 0; db <= std::min(b, 1); ++db)
        for (int dc = 0; dc <= c; ++dc) acc += d[pidx(da, db, dc)] * w[pidx(a - da, b - db, c - dc)];
    return acc;
  };
  const cplx g110 = coef(1, 1, 0);
  r = g110.real();
  r2 = (4.0 * coef(2, 2, 0) - 2.0 * coef(1, 1, 1) + 2.0 * g110).real();
  sz = coef(0, 0, 1).real();
}

Poly power(Poly x, int n) {
  Poly acc = unit_poly();
  for (; n > 0; n >>= 1) {
    if (n & 1) acc = mul(acc, x);
    if (n > 1) x = mul(x, x);
  }
  return acc;
}

ProductMoments moments_from(const Poly& g) {
  ProductMoments m;
  m.expR = g[pidx(1, 1, 0)].real();
  m.expR2 = (4.0 * g[pidx(2, 2, 0)] - 2.0 * g[pidx(1, 1, 1)] + 2.0 * g[pidx(1, 1, 0)]).real();
  m.expSz = g[pidx(0, 0, 1)].real();
  return m;
}

// ---------------------------------------------------------------------------

void ProductState::validate() const {
  check_lengths(*this);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (!std::isfinite(theta[j]) || !std::isfinite(phi[j]) || !std::isfinite(phase_of(*this, j)))
      throw std::invalid_argument(fmt::format("ProductState: non-finite angle at qubit {}", j));
    if (theta[j] < -1e-12 || theta[j] > kPi + 1e-12)
      throw std::invalid_argument(fmt::format("ProductState: theta[{}] = {} outside [0, pi]", j, theta[j]));
  }
}

ProductState ProductState::uniform(int n, double theta, double phi) {
  if (n < 1) throw std::invalid_argument("ProductState::uniform: N must be >= 1");
  return {std::vector<double>(n, theta), std::vector<double>(n, phi), {}};
}

ProductState ProductState::k_excited(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("ProductState::k_excited: k out of range");
  ProductState p = uniform(n, kPi);
  for (int j = 0; j < k; ++j) p.theta[j] = 0.0;
  return p;
}

ProductState canonical(ProductState p) {
  for (std::size_t j = 0; j < p.theta.size(); ++j) {
    double t = std::fmod(p.theta[j], 2.0 * kPi);
    if (t < 0) t += 2.0 * kPi;
    double f = p.phi[j];
    if (t > kPi) {  // theta -> 2 pi - theta flips the sign of sin(theta/2)
      t = 2.0 * kPi - t;
      f += kPi;
    }
    f = std::fmod(f, 2.0 * kPi);
    if (f < 0) f += 2.0 * kPi;
    p.theta[j] = t;
    p.phi[j] = f;
  }
  return p;
}

ProductMoments product_moments(const ProductState& p) {
  check_lengths(p);
  Poly g = unit_poly();
  for (std::size_t j = 0; j < p.theta.size(); ++j)
    g = mul_site(g, site_poly(p.theta[j], p.phi[j], phase_of(p, j)));
  return moments_from(g);
}

ProductMomentGradients product_moments_with_gradient(const ProductState& p) {
  check_lengths(p);
  const std::size_t n = p.theta.size();
  std::vector<Poly> sites(n), prefix(n + 1);
  prefix[0] = unit_poly();
  for (std::size_t j = 0; j < n; ++j) {
    sites[j] = site_poly(p.theta[j], p.phi[j], phase_of(p, j));
    prefix[j + 1] = mul_site(prefix[j], sites[j]);
  }
  ProductMomentGradients out;
  out.value = moments_from(prefix[n]);
  out.dR.assign(2 * n, 0.0);
  out.dR2.assign(2 * n, 0.0);
  out.dSz.assign(2 * n, 0.0);

  Poly suffix = unit_poly();
  for (std::size_t jj = n; jj-- > 0;) {
    const Poly w = mul(prefix[jj], suffix);
    const double chi = phase_of(p, jj);
    targets_of_product(site_dtheta(p.theta[jj], p.phi[jj], chi), w, out.dR[jj], out.dR2[jj], out.dSz[jj]);
    targets_of_product(site_dphi(p.theta[jj], p.phi[jj], chi), w, out.dR[n + jj], out.dR2[n + jj],
                       out.dSz[n + jj]);
    suffix = mul_site(suffix, sites[jj]);
  }
  return out;
}

CVector product_statevector(const ProductState& p) {
  check_lengths(p);
  const int n = p.size();
  if (n > kFullSpaceFlaggedMaxN) throw std::length_error("product_statevector: N too large");
  const int d = 1 << n;
  CVector v = CVector::Ones(d);
  for (int q = 0; q < n; ++q) {
    const cplx e = std::cos(0.5 * p.theta[q]);
    const cplx g = std::polar(std::sin(0.5 * p.theta[q]), p.phi[q]);
    const int bit = 1 << (n - 1 - q);
    for (int idx = 0; idx < d; ++idx) v[idx] *= (idx & bit) ? e : g;
  }
  return v;
}

ProductMoments statevector_oracle(const ProductState& p) {
  check_lengths(p);
  if (p.size() > 10) throw std::length_error("statevector_oracle: N must be <= 10");
  const CVector v = product_statevector(p);
  const auto ops = build_full_collective_operators(p.size(), p.phase);
  const CVector sm = ops.minus.sparse() * v;
  const CVector ssm = ops.plus.sparse() * sm;  // R |v>
  ProductMoments m;
  m.expR = sm.squaredNorm();
  m.expR2 = ssm.squaredNorm();
  m.expSz = v.dot(ops.z.sparse() * v).real();
  return m;
}

// ---------------------------------------------------------------------------

void SeparableMixture::validate() const {
  if (components.empty()) throw std::invalid_argument("SeparableMixture: no components");
  if (weights.size() != components.size())
    throw std::invalid_argument("SeparableMixture: weights and components differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12)) throw std::invalid_argument("SeparableMixture: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("SeparableMixture: weights must sum to 1");
  const int n = components.front().size();
  for (const auto& c : components) {
    c.validate();
    if (c.size() != n) throw std::invalid_argument("SeparableMixture: components differ in N");
  }
}

ProductMoments SeparableMixture::moments() const {
  ProductMoments m;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto c = product_moments(components[k]);
    m.expR += weights[k] * c.expR;
    m.expR2 += weights[k] * c.expR2;
    m.expSz += weights[k] * c.expSz;
  }
  return m;
}

double SeparableMixture::second_moment_about(double r) const {
  const auto m = moments();
  return m.expR2 - 2.0 * r * m.expR + r * r;
}

CMatrix SeparableMixture::density_matrix() const {
  if (components.empty()) throw std::invalid_argument("SeparableMixture: no components");
  if (components.front().size() > 10) throw std::length_error("SeparableMixture::density_matrix: N must be <= 10");
  const int d = 1 << components.front().size();
  CMatrix rho = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < components.size(); ++k) {
    const CVector v = product_statevector(components[k]);
    rho.noalias() += weights[k] * v * v.adjoint();
  }
  return rho;
}

}  // namespace superwit::separable
