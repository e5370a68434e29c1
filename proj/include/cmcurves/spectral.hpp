#pragma once

// The spectral curve R(k,z) = det(kI + L(z)) of an N-particle state, its
// H(phi) parametrization, the bridge fit between the two, sheet tracking
// over the base torus, and the singular-point census.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cmcurves/dynamics.hpp"
#include "cmcurves/elliptic.hpp"
#include "cmcurves/polyroots.hpp"

namespace cmc {

// Either determinant-backed (a phase-space point) or H-backed (the N
// coefficients I_0..I_{N-1} of the monic degree-N polynomial H).
struct CurveSpec {
    int N = 0;
    std::optional<PhasePoint> state;
    std::optional<Eigen::VectorXcd> I;
    EllipticData data;

    bool det_backed() const { return state.has_value(); }
};

CurveSpec curve_from_state(const PhasePoint& s);
CurveSpec curve_from_H(const Eigen::VectorXcd& I, const EllipticData& data);

// Monic coefficients in k, ascending, size N+1. For the det backing the
// characteristic-coefficient recursion is cross-checked against sampled-
// determinant interpolation to 1e-9 for N <= 4.
poly::Coeffs char_poly(const CurveSpec& curve, cplx z);

cplx curve_eval(const CurveSpec& curve, cplx k, cplx z);

// max_{i,t} |r_i(z,t) - r_i(z,0)| / (1 + |r_i(z,0)|) along the trajectory.
double isospectral_drift(const Trajectory& traj, cplx z);

// Fit of the small-z root branches k_j(z) = a_j / z + h_j + O(z); the
// distinguished branch (a = 1-N) is returned first.
struct LaurentPair {
    cplx a, h;
};
std::vector<LaurentPair> leading_laurent(const CurveSpec& curve);

// Least-squares fit of the H coefficients reproducing a det-backed curve;
// residual is measured on a disjoint validation grid, relative to 1+|R|.
struct HFit {
    Eigen::VectorXcd I;
    double residual = 0.0;
};
HFit fit_H(const CurveSpec& curve, unsigned seed = 1234);

// Closed base loop a*[0,1] + b*[0,tau] from a basepoint, lifted to the
// cover starting on the given sheet (index into the sorted roots at the
// basepoint).
struct LiftedLoop {
    int a = 0, b = 0;
    cplx basepoint;
    int sheet = 0;
    int steps = 400;
};

struct SheetTrack {
    int sheet = 0;  // arrival sheet index at the basepoint
    cplx k;         // arrival k value
};
SheetTrack sheet_track(const CurveSpec& curve, const LiftedLoop& loop);

struct SingularPoint {
    cplx z, k;
    std::string note;
};

struct CensusReport {
    int N = 0;
    std::vector<SingularPoint> nodes, cusps, unclassified;
};

constexpr double kEpsSingular = 1e-8;
constexpr double kCubicThreshold = 1e-6;

// Common zeros of (R, dR/dk, dR/dz) in the fundamental domain (a small
// disk around z = 0 is excluded: the r_i have poles there and the point
// at infinity is outside the search domain). Classification by the 2x2
// Hessian: nondegenerate -> node; rank 1 with nonvanishing directional
// cubic -> cusp; everything else -> unclassified with a diagnostic note.
CensusReport singularity_census(const CurveSpec& curve);

struct CuspBoundVerdict {
    bool conclusive = false;
    bool pass = false;
    int margin = 0;  // N - 2*cusps - nodes
    int cusps = 0, nodes = 0, N = 0;
};
CuspBoundVerdict verify_cusp_bound(const CensusReport& report);

std::string census_json(const CensusReport& report);

// CSV `re_z,im_z,i,re_ri,im_ri` of the coefficients r_i over z samples.
std::string curve_samples_csv(const CurveSpec& curve,
                              const std::vector<cplx>& z_samples);

}  // namespace cmc
