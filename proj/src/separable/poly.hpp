#pragma once

#include <array>

#include "superwit/separable.hpp"

namespace superwit::separable {

// Truncated trivariate series in (x, y, z) with degrees a, b <= 2, c <= 1.
using Poly = std::array<cplx, 18>;

constexpr int pidx(int a, int b, int c) { return (a * 3 + b) * 2 + c; }

Poly site_poly(double theta, double phi, double chi);
Poly site_dtheta(double theta, double phi, double chi);
Poly site_dphi(double theta, double phi, double chi);
Poly mul_site(const Poly& acc, const Poly& site);
Poly mul(const Poly& x, const Poly& y);
Poly unit_poly();
/// x^n in the truncated algebra.
Poly power(Poly x, int n);
/// Moments read off a generating polynomial (linear in its coefficients).
ProductMoments moments_from(const Poly& g);

}  // namespace superwit::separable
