#pragma once

// Dense complex polynomials in one variable, coefficients ascending
// (p[0] + p[1] x + ... + p[n] x^n), with companion-matrix root finding
// and the Sylvester resultant.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cmcurves/errors.hpp"

namespace cmc::poly {

using Coeffs = Eigen::VectorXcd;

cplx eval(const Coeffs& p, cplx x);
Coeffs derivative(const Coeffs& p);

// All roots, companion-matrix eigenvalues polished by a few Newton steps.
std::vector<cplx> roots(const Coeffs& p);

// Resultant of p and q via the Sylvester matrix determinant.
cplx resultant(const Coeffs& p, const Coeffs& q);

// Discriminant of p up to the conventional leading-coefficient factor:
// res(p, p') / lead(p).
cplx discriminant(const Coeffs& p);

// Minimal pairwise gap of a root multiset.
double min_pairwise_gap(const std::vector<cplx>& r);

}  // namespace cmc::poly
