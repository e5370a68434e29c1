#pragma once

// Weierstrass functions on the lattice Z + tau*Z, the two-variable kernel
// F(x,z) built from them, and the small quadrature toolbox used by the
// period computations.
//
// Conventions fixed here once for the whole library:
//   zeta(z+1)   = zeta(z) + 2*eta1
//   zeta(z+tau) = zeta(z) + 2*eta2
//   eta1*tau - eta2 = i*pi        (Legendre relation)
// Evaluation goes through theta series in the nome q = exp(i*pi*tau) after
// argument reduction to the fundamental parallelogram; the direct Eisenstein
// lattice sum is kept only as a slow oracle in the tests.

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "cmcurves/errors.hpp"

namespace cmc {

struct EllipticData {
    cplx tau;             // Im tau > 0
    cplx eta1, eta2;      // quasi-period constants, full-period increments /2
    cplx g2, g3;          // lattice invariants
    int trunc = 40;       // theta series truncation
    double tol = 1e-10;   // target absolute accuracy
    double pole_eps = 1e-9;

    // cached: nome and theta1'(0)
    cplx q;
    cplx theta1_prime0;
};

enum class Kind { P, Pprime, Zeta, Sigma };

EllipticData lattice_invariants(cplx tau, int trunc = 40, double tol = 1e-10);

// z = z0 + m + n*tau with z0 in the centered fundamental parallelogram.
struct Reduced {
    cplx z0;
    long m, n;
};
Reduced reduce_mod_lattice(cplx z, const EllipticData& data);

// Distance from z to the nearest lattice point.
double lattice_distance(cplx z, const EllipticData& data);

cplx weierstrass(cplx z, Kind kind, const EllipticData& data);

// F(x,z) = sigma(z-x) / (sigma(z) sigma(x)) * exp(zeta(z) x)
cplx kr_kernel(cplx x, cplx z, const EllipticData& data);
// dF/dx = F * (zeta(z) - zeta(x) - zeta(z-x))
cplx kr_kernel_dx(cplx x, cplx z, const EllipticData& data);

// d^n/dz^n sigma(z) for n = 0..n_max (n_max <= 12), by Cauchy-integral
// differentiation on a circle of radius 0.25*min(1, Im tau).
std::vector<cplx> sigma_z_derivs(cplx z, int n_max, const EllipticData& data);

struct Segment {
    cplx start, end;
    int nodes = 32;
};

// Gauss-Legendre quadrature of f along the straight segment, with the node
// count doubled until the two last estimates agree to tol (cap 256 nodes).
cplx segment_integral(const std::function<cplx(cplx)>& f, const Segment& seg,
                      double tol = 1e-12);

// c1 = -2*eta1, c2 = -2*eta2/tau: the constants making the [0,1] resp.
// [0,tau] period of (wp(z) - c) dz vanish.
std::pair<cplx, cplx> c_constants(const EllipticData& data);

}  // namespace cmc
