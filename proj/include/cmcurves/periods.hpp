#pragma once

// Period machinery in two settings:
//  - on a spectral curve: the differentials Phi_1, Phi_2 with integer
//    periods, the lifted-loop period computation, and the degree formula
//    cross-check (sheet count vs symplectic period pairing);
//  - on the base torus itself: the real-period differentials Psi_1, Psi_2
//    with prescribed singular parts dz/z^2 and i dz/z^2, their zeros, the
//    genus-1 no-common-zero check, and level-set leaf tracing.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmcurves/elliptic.hpp"
#include "cmcurves/spectral.hpp"

namespace cmc {

enum class PhiKind { Phi1, Phi2 };

// Phi_1 = (1/2pi i)(dk - (wp(z) - c1) dz),
// Phi_2 = (tau/2pi i)(dk - (wp(z) - c2) dz).
struct DifferentialOnCurve {
    CurveSpec curve;
    PhiKind which = PhiKind::Phi1;
    cplx c;  // the matching constant c1 or c2
};

DifferentialOnCurve make_phi(const CurveSpec& curve, PhiKind which);

struct PeriodResult {
    cplx value;
    long nearest = 0;       // nearest integer to Re(value)
    double deviation = 0;   // |value - nearest|
    bool is_integer = false;  // deviation < 1e-6
    int repetitions = 1;    // base-loop repetitions until the sheet closed
};

// Period of the differential over the lifted closure of the base loop.
// The base loop is repeated until the tracked sheet returns to the start
// (at most N times; failure to close is a consistency error since the
// cover has degree N). dk is exact, so its contribution is the measured
// closure defect of k, reported inside `value`.
PeriodResult phi_period(const DifferentialOnCurve& diff, const LiftedLoop& loop);

// Degree of the cover two ways: (a) sheet count at a generic z (always);
// (b) for N = 2, the symplectic period pairing of Phi_1, Phi_2 over an
// explicitly built homology basis of the genus-2 cover (lifted base loops
// plus dumbbell loops around the two branch points, intersection numbers
// from oriented crossings). Returns N; disagreement between the two
// routes throws.
int degree_check(const CurveSpec& curve);

// Psi = (scale * wp(z) + b) dz with scale = 1 (Psi_1) or i (Psi_2);
// double pole at 0, zero residue, both periods real.
struct TorusDifferential {
    EllipticData data;
    cplx b;
    cplx scale;

    cplx eval(cplx z) const { return scale * weierstrass(z, Kind::P, data) + b; }
};

// The two periods -2*scale*eta1 + b and -2*scale*eta2 + b*tau.
std::pair<cplx, cplx> torus_periods(const TorusDifferential& psi);

// Solves Im(-2*scale*eta1 + b) = 0, Im(-2*scale*eta2 + b*tau) = 0 for b;
// the 2x2 real system is nonsingular whenever Im tau != 0.
std::pair<TorusDifferential, TorusDifferential> torus_real_basis(
    const EllipticData& data);

// The two zeros +-z0 of scale*wp + b in the fundamental domain, each
// verified to |wp(z) + b/scale| < 1e-9. A double zero at a half-period
// (wp-level within 1e-8 of a critical value) is reported unrefined.
std::vector<cplx> torus_zeros(const TorusDifferential& psi);

// Genus-1 base case: Psi_1 and Psi_2 have no common zero. Checks both the
// zero-set distance (> 1e-6 mod lattice) and the sharper wp-level gap
// |(-b1/scale1) - (-b2/scale2)| > 1e-6.
bool base_case_check(const TorusDifferential& psi1, const TorusDifferential& psi2);
bool base_case_check(const EllipticData& data);

struct LevelSetPolyline {
    double c_value = 0;          // the Im F1 level (0: F1 measured from start)
    std::vector<double> s;       // flow parameter, equals Re F1 gain
    std::vector<cplx> points;    // samples on E
    std::vector<cplx> f1;        // accumulated segment integrals of Psi_1
    bool closed_through_pole = false;
    std::optional<cplx> saddle;  // Newton-refined zero of Psi_1 if the flow
                                 // stopped within 1e-3 of one
};

// Integrates dz/ds = 1/psi_1(z) (so dF_1/ds = 1 exactly) until arc_length
// in s is consumed, the 1e-2 pole guard around 0 triggers, or the flow
// comes within 1e-3 of a zero of psi_1 (saddle stop).
LevelSetPolyline trace_level_set(const TorusDifferential& psi1, cplx start,
                                 double arc_length);

// CSV `s, re_z, im_z, re_F1, im_F1`.
std::string level_set_csv(const LevelSetPolyline& leaf);

// JSON {loop:{a,b,sheet}, differential, period:[re,im], nearest_int, deviation}.
std::string period_json(const LiftedLoop& loop, PhiKind which,
                        const PeriodResult& period);

}  // namespace cmc
