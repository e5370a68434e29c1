#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cmcurves/spectral.hpp"

using namespace cmc;
using std::numbers::pi;

namespace {

const cplx I{0.0, 1.0};

std::mt19937_64 rng(2718);

PhasePoint fixed_state(int n, const EllipticData& d) {
    // verified well-separated, stable configurations (the attractive flow
    // makes unconstrained random states collapse)
    Eigen::VectorXcd x(n), q(n);
    if (n == 1) {
        x << cplx(0.3, 0.55);
        q << cplx(0.8, 0.3);
    } else if (n == 2) {
        x << cplx(0.1, 0.2), cplx(0.6, 0.2);
        q << cplx(0.5, 0.1), cplx(-0.5, -0.1);
    } else if (n == 3) {
        x << cplx(0.1, 0.15), cplx(0.45, 0.5), cplx(0.8, 0.85);
        q << cplx(0.4, 0.05), cplx(-0.1, -0.15), cplx(-0.3, 0.1);
    } else {
        x << cplx(0.05, 0.1), cplx(0.3, 0.4), cplx(0.55, 0.7), cplx(0.85, 0.95);
        q << cplx(0.3, 0.05), cplx(-0.1, 0.1), cplx(0.1, -0.1), cplx(-0.3, -0.05);
    }
    return make_phase_point(x, q, d);
}

cplx random_z(const EllipticData& d, const PhasePoint& s) {
    std::uniform_real_distribution<double> u(0.1, 0.9);
    while (true) {
        cplx z = u(rng) + u(rng) * d.tau;
        bool ok = lattice_distance(z, d) > 0.1;
        for (int i = 0; i < s.n() && ok; ++i)
            for (int j = 0; j < s.n(); ++j)
                if (i != j && lattice_distance(z - (s.x[i] - s.x[j]), d) < 0.05) ok = false;
        if (ok) return z;
    }
}

}  // namespace

TEST_CASE("char_poly closed forms") {
    EllipticData d = lattice_invariants(cplx(0.1, 1.1));

    SUBCASE("N=1: R = k + q/2") {
        PhasePoint s = fixed_state(1, d);
        poly::Coeffs c = char_poly(curve_from_state(s), cplx(0.3, 0.4));
        REQUIRE(c.size() == 2);
        CHECK(std::abs(c[1] - 1.0) < 1e-12);
        CHECK(std::abs(c[0] - 0.5 * s.q[0]) < 1e-12);
    }

    SUBCASE("N=2: explicit quadratic and z-independent trace") {
        PhasePoint s = fixed_state(2, d);
        CurveSpec curve = curve_from_state(s);
        cplx z1{0.3, 0.45}, z2{0.7, 0.2};
        poly::Coeffs c1 = char_poly(curve, z1), c2 = char_poly(curve, z2);
        CHECK(std::abs(c1[1] - c2[1]) < 1e-10);  // r1 has no z dependence
        CHECK(std::abs(c1[1] - 0.5 * (s.q[0] + s.q[1])) < 1e-10);
        // independent closed form for the determinant coefficient
        cplx det = 0.25 * s.q[0] * s.q[1] -
                   (weierstrass(z1, Kind::P, d) - weierstrass(s.x[0] - s.x[1], Kind::P, d));
        CHECK(std::abs(c1[0] - det) < 1e-9 * std::max(1.0, std::abs(det)));
    }

    SUBCASE("pole order: |r_i z^i| bounded as z -> 0") {
        PhasePoint s = fixed_state(3, d);
        CurveSpec curve = curve_from_state(s);
        std::vector<double> bound(4, 0.0);
        for (int m = 2; m <= 7; ++m) {
            cplx z = cplx(0.41, 0.23) / double(1 << m);
            poly::Coeffs c = char_poly(curve, z);
            for (int i = 1; i <= 3; ++i) {
                double v = std::abs(c[3 - i] * std::pow(z, double(i)));
                bound[i] = std::max(bound[i], v);
            }
        }
        for (int i = 1; i <= 3; ++i) CHECK(bound[i] < 50.0);
    }

    SUBCASE("built-in cross-check passes for N=4") {
        PhasePoint s = fixed_state(4, d);
        CHECK_NOTHROW(char_poly(curve_from_state(s), cplx(0.3, 0.6)));
    }

    SUBCASE("z on the lattice raises") {
        PhasePoint s = fixed_state(2, d);
        CHECK_THROWS_AS(char_poly(curve_from_state(s), cplx(0.0, 0.0)), PoleError);
    }
}

TEST_CASE("isospectral drift") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));

    SUBCASE("N=1 free motion: exactly conserved") {
        Trajectory tr = integrate(fixed_state(1, d), 1.0, 1e-2);
        CHECK(isospectral_drift(tr, cplx(0.4, 0.3)) < 1e-13);
    }

    SUBCASE("N=3: bounded drift, improved ~16x at half step") {
        PhasePoint s = fixed_state(3, d);
        cplx z = random_z(d, s);
        Trajectory tr = integrate(s, 1.0, 1e-3);
        double drift = isospectral_drift(tr, z);
        CHECK(drift < 1e-7);
        Trajectory th = integrate(s, 1.0, 5e-4);
        double dh = isospectral_drift(th, z);
        CHECK(dh < drift / 8.0);
        // order of magnitude agreement across z
        double other = isospectral_drift(tr, random_z(d, s));
        CHECK(other < 30.0 * drift);
        CHECK(drift < 30.0 * other);
    }
}

TEST_CASE("leading Laurent data") {
    EllipticData d = lattice_invariants(cplx(0.05, 1.05));

    SUBCASE("N=1: a=0, h=q/2") {
        PhasePoint s = fixed_state(1, d);
        auto lp = leading_laurent(curve_from_state(s));
        REQUIRE(lp.size() == 1);
        CHECK(std::abs(lp[0].a) < 1e-6);
        CHECK(std::abs(lp[0].h - 0.5 * s.q[0]) < 1e-6);
    }

    SUBCASE("exponents {1-N, 1, ..., 1} and zero sum") {
        for (int n : {2, 3, 4}) {
            auto lp = leading_laurent(curve_from_state(fixed_state(n, d)));
            REQUIRE(int(lp.size()) == n);
            CHECK(std::abs(lp[0].a - cplx(1.0 - n)) < 1e-4);
            cplx sum = lp[0].a;
            for (int j = 1; j < n; ++j) {
                CHECK(std::abs(lp[j].a - 1.0) < 1e-4);
                sum += lp[j].a;
            }
            CHECK(std::abs(sum) < 1e-4);
        }
    }
}

TEST_CASE("H-backed curves") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    SUBCASE("N=1: R = k + I0") {
        Eigen::VectorXcd I0(1);
        I0 << cplx(0.4, -0.2);
        CurveSpec c = curve_from_H(I0, d);
        for (int rep = 0; rep < 5; ++rep) {
            cplx k(u(rng), u(rng)), z(0.2 + 0.3 * (u(rng) + 1.0), 0.2 + 0.3 * (u(rng) + 1.0));
            CHECK(std::abs(curve_eval(c, k, z) - (k + I0[0])) < 1e-9);
        }
    }

    SUBCASE("monic and elliptic in z") {
        Eigen::VectorXcd I3(3);
        I3 << cplx(0.3, 0.1), cplx(-0.5, 0.2), cplx(0.1, -0.4);
        CurveSpec c = curve_from_H(I3, d);
        cplx z{0.31, 0.57};
        poly::Coeffs co = char_poly(c, z);
        CHECK(std::abs(co[3] - 1.0) < 1e-9);
        cplx k{0.7, -0.3};
        cplx v = curve_eval(c, k, z);
        CHECK(std::abs(curve_eval(c, k, z + 1.0) - v) < 1e-8 * std::max(1.0, std::abs(v)));
        CHECK(std::abs(curve_eval(c, k, z + d.tau) - v) < 1e-8 * std::max(1.0, std::abs(v)));
    }
}

TEST_CASE("fit_H bridge") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));

    SUBCASE("N=1: I0 = q/2 at roundoff") {
        PhasePoint s = fixed_state(1, d);
        HFit fit = fit_H(curve_from_state(s));
        CHECK(std::abs(fit.I[0] - 0.5 * s.q[0]) < 1e-9);
        CHECK(fit.residual < 1e-9);
    }

    SUBCASE("N=2,3: validation residual below 1e-6") {
        for (int n : {2, 3}) {
            HFit fit = fit_H(curve_from_state(fixed_state(n, d)));
            CHECK(fit.residual < 1e-6);
        }
    }

    SUBCASE("fitted I constant along a trajectory") {
        PhasePoint s = fixed_state(2, d);
        Trajectory tr = integrate(s, 1.0, 1e-3);
        HFit f0 = fit_H(curve_from_state(tr.states.front()));
        HFit f1 = fit_H(curve_from_state(tr.states[tr.states.size() / 2]));
        HFit f2 = fit_H(curve_from_state(tr.states.back()));
        for (int i = 0; i < 2; ++i) {
            CHECK(std::abs(f1.I[i] - f0.I[i]) < 1e-6);
            CHECK(std::abs(f2.I[i] - f0.I[i]) < 1e-6);
        }
    }
}

TEST_CASE("sheet tracking and monodromy") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));
    const cplx base{0.23, 0.31};

    SUBCASE("trivial loop is the identity") {
        CurveSpec c = curve_from_state(fixed_state(2, d));
        for (int s = 0; s < 2; ++s) {
            SheetTrack t = sheet_track(c, {0, 0, base, s, 64});
            CHECK(t.sheet == s);
        }
    }

    SUBCASE("loop composed with its inverse is the identity") {
        CurveSpec c = curve_from_state(fixed_state(2, d));
        for (int s = 0; s < 2; ++s) {
            SheetTrack fwd = sheet_track(c, {1, 0, base, s, 400});
            SheetTrack back = sheet_track(c, {-1, 0, base, fwd.sheet, 400});
            CHECK(back.sheet == s);
        }
    }

    SUBCASE("monodromy acts transitively (connected curve), N=2,3") {
        for (int n : {2, 3}) {
            CurveSpec c = curve_from_state(fixed_state(n, d));
            std::vector<int> perm_a(n), perm_b(n);
            for (int s = 0; s < n; ++s) {
                perm_a[s] = sheet_track(c, {1, 0, base, s, 500}).sheet;
                perm_b[s] = sheet_track(c, {0, 1, base, s, 500}).sheet;
            }
            // permutation sanity
            CHECK(std::set<int>(perm_a.begin(), perm_a.end()).size() == size_t(n));
            CHECK(std::set<int>(perm_b.begin(), perm_b.end()).size() == size_t(n));
            // orbit of sheet 0 under the generated group
            std::set<int> orbit{0};
            for (bool grew = true; grew;) {
                grew = false;
                for (int s : std::set<int>(orbit)) {
                    for (int t : {perm_a[s], perm_b[s]})
                        if (orbit.insert(t).second) grew = true;
                }
            }
            CHECK(orbit.size() == size_t(n));
        }
    }
}

TEST_CASE("singularity census") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));

    SUBCASE("N=1 is smooth") {
        CensusReport rep = singularity_census(curve_from_state(fixed_state(1, d)));
        CHECK(rep.nodes.empty());
        CHECK(rep.cusps.empty());
        CHECK(rep.unclassified.empty());
    }

    SUBCASE("generic N=3 H-backed curve is smooth") {
        Eigen::VectorXcd I3(3);
        I3 << cplx(0.37, 0.11), cplx(-0.52, 0.23), cplx(0.14, -0.41);
        CensusReport rep = singularity_census(curve_from_H(I3, d));
        CHECK(rep.nodes.empty());
        CHECK(rep.cusps.empty());
        CHECK(rep.unclassified.empty());
        CuspBoundVerdict v = verify_cusp_bound(rep);
        CHECK(v.conclusive);
        CHECK(v.pass);
        CHECK(v.margin == 3);
    }

    SUBCASE("half-period pair with equal momenta: exactly one node") {
        // q1 = q2 and x1 - x2 = 1/2 put a double point at z = 1/2: there
        // R = wp(1/2) - wp(z), dR/dk = 2k + q vanishes at k = -q/2, and
        // dR/dz = -wp'(z) vanishes at the half period.
        Eigen::VectorXcd x(2), q(2);
        x << cplx(0.2, 0.35), cplx(0.7, 0.35);
        q << cplx(0.4, 0.1), cplx(0.4, 0.1);
        PhasePoint s = make_phase_point(x, q, d);
        CensusReport rep = singularity_census(curve_from_state(s));
        REQUIRE(rep.nodes.size() == 1);
        CHECK(rep.cusps.empty());
        CHECK(rep.unclassified.empty());
        CHECK(lattice_distance(rep.nodes[0].z - 0.5, d) < 1e-7);
        CHECK(std::abs(rep.nodes[0].k + 0.5 * q[0]) < 1e-7);
        CuspBoundVerdict v = verify_cusp_bound(rep);
        CHECK(v.pass);
        CHECK(v.margin == 1);

        // deterministic: rerun reproduces the same point
        CensusReport rep2 = singularity_census(curve_from_state(s));
        REQUIRE(rep2.nodes.size() == 1);
        CHECK(std::abs(rep2.nodes[0].z - rep.nodes[0].z) < 1e-10);
    }
}

TEST_CASE("cusp bound arithmetic") {
    CensusReport rep;
    rep.N = 2;
    rep.cusps.push_back({cplx(0.5, 0.5), cplx(0.0, 0.0), ""});
    CuspBoundVerdict v = verify_cusp_bound(rep);
    CHECK(v.conclusive);
    CHECK(!v.pass);  // 2n + k = 2, margin 0: would contradict the bound
    CHECK(v.margin == 0);

    rep.unclassified.push_back({cplx(0.1, 0.1), cplx(0.0, 0.0), "synthetic"});
    v = verify_cusp_bound(rep);
    CHECK(!v.conclusive);
    CHECK(!v.pass);  // inconclusive is never a pass
}

TEST_CASE("exports") {
    EllipticData d = lattice_invariants(cplx(0.0, 1.0));
    CensusReport rep;
    rep.N = 3;
    rep.nodes.push_back({cplx(0.5, 0.25), cplx(-0.2, 0.0), ""});
    std::string js = census_json(rep);
    CHECK(js.find("\"N\": 3") != std::string::npos);
    CHECK(js.find("\"nodes\"") != std::string::npos);
    CHECK(js.find("\"bound\"") != std::string::npos);
    CHECK(js.find("\"margin\": 2") != std::string::npos);

    CurveSpec c = curve_from_state(fixed_state(2, d));
    std::string csv = curve_samples_csv(c, {cplx(0.3, 0.4), cplx(0.6, 0.7)});
    CHECK(csv.find("re_z,im_z,i,re_ri,im_ri") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 2*2 rows
}
