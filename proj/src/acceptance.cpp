#include "cmcurves/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cmcurves/dynamics.hpp"
#include "cmcurves/periods.hpp"
#include "cmcurves/polyroots.hpp"
#include "cmcurves/spectral.hpp"

namespace cmc {

namespace {

using std::numbers::pi;
const cplx kI{0.0, 1.0};

// Verified well-separated, stable configurations: the attractive pair
// potential makes unconstrained random states collapse, so the dynamic
// criteria jitter these instead of drawing positions blindly.
PhasePoint fixed_state(int n, const EllipticData& d) {
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

PhasePoint jittered_state(int n, const EllipticData& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    PhasePoint base = fixed_state(n, d);
    Eigen::VectorXcd x = base.x, q = base.q;
    for (int i = 0; i < n; ++i) {
        x[i] += 0.04 * cplx(u(rng), u(rng));
        q[i] += 0.2 * cplx(u(rng), u(rng));
    }
    return make_phase_point(x, q, d);
}

cplx random_tau(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> re(-0.5, 0.5), im(0.5, 3.0);
    double r = re(rng), i = im(rng);
    return {r, i};
}

cplx random_spectral_z(const EllipticData& d, const PhasePoint& s,
                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 0.9);
    while (true) {
        double a = u(rng), b = u(rng);
        cplx z = a + b * d.tau;
        bool ok = lattice_distance(z, d) > 0.15;
        for (int i = 0; i < s.n() && ok; ++i)
            for (int j = 0; j < s.n(); ++j)
                if (i != j &&
                    lattice_distance(z - (s.x[i] - s.x[j]), d) < 0.05)
                    ok = false;
        if (ok) return z;
    }
}

CriterionResult run_one(int id, const std::string& description,
                        const std::function<void(CriterionResult&)>& body) {
    CriterionResult r;
    r.id = id;
    r.description = description;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    return r;
}

// --- criterion 1: quasi-period relation and the wp differential equation ---
CriterionResult criterion_legendre(const SuiteConfig& cfg) {
    return run_one(
        1,
        "Legendre relation eta1*tau - eta2 = i*pi and the differential "
        "equation (wp')^2 = 4 wp^3 - g2 wp - g3 over 50 seeded lattices",
        [&](CriterionResult& r) {
            std::mt19937_64 rng(cfg.seed + 1);
            std::uniform_real_distribution<double> u(0.15, 0.85);
            double worst = 0.0;
            for (int t = 0; t < 50; ++t) {
                EllipticData d = lattice_invariants(random_tau(rng));
                worst = std::max(worst,
                                 std::abs(d.eta1 * d.tau - d.eta2 - kI * pi));
                for (int s = 0; s < 4; ++s) {
                    double a = u(rng), b = u(rng);
                    cplx z = a + b * d.tau;
                    if (lattice_distance(z, d) < 0.15) continue;
                    cplx wp = weierstrass(z, Kind::P, d);
                    cplx wpp = weierstrass(z, Kind::Pprime, d);
                    cplx ode = wpp * wpp -
                               (4.0 * wp * wp * wp - d.g2 * wp - d.g3);
                    worst = std::max(worst, std::abs(ode));
                }
            }
            EllipticData sq = lattice_invariants(kI);
            double eta_dev = std::abs(sq.eta1 - 0.5 * pi);
            r.measured = worst;
            r.bound = 1e-9;
            r.pass = worst < r.bound && eta_dev < 1e-10;
            std::ostringstream os;
            os << "square lattice |eta1 - pi/2| = " << eta_dev;
            r.detail = os.str();
        });
}

// --- criterion 2: the two edge-period identities for (wp - c) dz ---
CriterionResult criterion_period_identities(const SuiteConfig& cfg) {
    return run_one(
        2,
        "edge periods: int_0^tau (wp - c1) dz = 2 pi i and "
        "int_0^1 (wp - c2) dz = -2 pi i / tau over 20 seeded lattices",
        [&](CriterionResult& r) {
            std::mt19937_64 rng(cfg.seed + 2);
            double worst = 0.0;
            for (int t = 0; t < 20; ++t) {
                cplx tau = (t == 0) ? cfg.tau : random_tau(rng);
                EllipticData d = lattice_invariants(tau);
                auto [c1, c2] = c_constants(d);
                auto wp_m = [&](cplx c) {
                    return [&d, c](cplx z) {
                        return weierstrass(z, Kind::P, d) - c;
                    };
                };
                cplx shift = 0.13;  // keep the straight path off the lattice
                cplx p1 = segment_integral(wp_m(c1), {shift, shift + tau});
                cplx shift2 = kI * 0.1 * tau.imag();
                cplx p2 = segment_integral(wp_m(c2), {shift2, shift2 + 1.0});
                worst = std::max(worst, std::abs(p1 - 2.0 * pi * kI));
                worst = std::max(worst, std::abs(p2 + 2.0 * pi * kI / tau));
            }
            r.measured = worst;
            r.bound = 1e-8;
            r.pass = worst < r.bound;
            r.detail =
                "orientation of the [0,1] identity fixed by the Legendre "
                "relation (verified against a lattice-sum oracle)";
        });
}

// --- criterion 3: Lax identity and the calibration scan ---
CriterionResult criterion_lax(const SuiteConfig& cfg) {
    return run_one(
        3,
        "Lax residual |dL/dt - [M,L]| < 1e-8 for N in {2,3,4}, five "
        "spectral points each; calibration scan pins the literal equations "
        "of motion",
        [&](CriterionResult& r) {
            std::mt19937_64 rng(cfg.seed + 3);
            EllipticData d = lattice_invariants(cfg.tau);
            double worst = 0.0;
            PhasePoint cal_state = fixed_state(3, d);
            for (int n : {2, 3, 4}) {
                PhasePoint s = jittered_state(n, d, rng);
                for (int rep = 0; rep < 5; ++rep)
                    worst = std::max(
                        worst, lax_residual(s, random_spectral_z(d, s, rng)));
            }
            LaxCalibration cal =
                calibrate_lax(cal_state, random_spectral_z(d, cal_state, rng));
            bool cal_ok = cal.best.factor == 4.0 && cal.best.comm_sign == -1 &&
                          cal.best.residual < 1e-8;
            for (const auto& e : cal.entries)
                if (!(e.factor == 4.0 && e.comm_sign == -1) &&
                    e.residual < 1e-4)
                    cal_ok = false;
            r.measured = worst;
            r.bound = 1e-8;
            r.pass = worst < r.bound && cal_ok;
            r.detail = cal_ok ? "calibration: qdot_i = 4 sum wp', dL/dt = [M,L]"
                              : "calibration scan did not single out the "
                                "literal transcription";
        });
}

// --- criterion 4: isospectral drift and its dt^4 refinement ---
CriterionResult criterion_isospectral(const SuiteConfig& cfg) {
    return run_one(
        4,
        "isospectral drift of the curve coefficients < 1e-7 over the N=3 "
        "flow, improving ~16x at half step",
        [&](CriterionResult& r) {
            std::mt19937_64 rng(cfg.seed + 4);
            EllipticData d = lattice_invariants(cfg.tau);
            PhasePoint s = fixed_state(3, d);
            cplx z = random_spectral_z(d, s, rng);
            Trajectory tr = integrate(s, cfg.t_end, cfg.dt);
            double drift = isospectral_drift(tr, z);
            Trajectory th = integrate(s, cfg.t_end, 0.5 * cfg.dt);
            double dh = isospectral_drift(th, z);
            r.measured = drift;
            r.bound = 1e-7;
            r.pass = drift < r.bound && dh < drift / 8.0;
            std::ostringstream os;
            os << "half-step drift " << dh << " (ratio " << drift / dh << ")";
            r.detail = os.str();
        });
}

// --- criterion 5: small-z factorization exponents ---
CriterionResult criterion_laurent(const SuiteConfig& cfg) {
    return run_one(
        5,
        "small-z branch exponents {1-N, 1, ..., 1} to 1e-4 for N in {2,3,4}",
        [&](CriterionResult& r) {
            (void)cfg;
            EllipticData d = lattice_invariants(cplx(0.05, 1.05));
            double worst = 0.0;
            for (int n : {2, 3, 4}) {
                auto lp = leading_laurent(curve_from_state(fixed_state(n, d)));
                worst = std::max(worst, std::abs(lp[0].a - cplx(1.0 - n)));
                for (int j = 1; j < n; ++j)
                    worst = std::max(worst, std::abs(lp[j].a - 1.0));
            }
            r.measured = worst;
            r.bound = 1e-4;
            r.pass = worst < r.bound;
        });
}

// --- criterion 6: H(phi) representation bridge ---
CriterionResult criterion_fit_h(const SuiteConfig& cfg) {
    return run_one(
        6,
        "H(phi) bridge: validation residual < 1e-6 for N in {1,2,3} and "
        "fitted action coefficients constant along the flow",
        [&](CriterionResult& r) {
            EllipticData d = lattice_invariants(cfg.tau);
            double worst = 0.0;
            for (int n : {1, 2, 3})
                worst = std::max(
                    worst, fit_H(curve_from_state(fixed_state(n, d))).residual);
            PhasePoint s = fixed_state(2, d);
            Trajectory tr = integrate(s, cfg.t_end, cfg.dt);
            HFit f0 = fit_H(curve_from_state(tr.states.front()));
            HFit f1 = fit_H(curve_from_state(tr.states[tr.states.size() / 2]));
            HFit f2 = fit_H(curve_from_state(tr.states.back()));
            double drift = 0.0;
            for (int i = 0; i < 2; ++i) {
                drift = std::max(drift, std::abs(f1.I[i] - f0.I[i]));
                drift = std::max(drift, std::abs(f2.I[i] - f0.I[i]));
            }
            r.measured = std::max(worst, drift);
            r.bound = 1e-6;
            r.pass = r.measured < r.bound;
            std::ostringstream os;
            os << "max validation residual " << worst << ", I drift " << drift;
            r.detail = os.str();
        });
}

// --- criterion 7: integer periods on lifted loops ---
CriterionResult criterion_integer_periods(const SuiteConfig& cfg) {
    return run_one(
        7,
        "periods of Phi_1, Phi_2 over 6 independent lifted loops on an N=2 "
        "curve within 1e-6 of integers",
        [&](CriterionResult& r) {
            (void)cfg;
            EllipticData d = lattice_invariants(cplx(0.1, 1.1));
            CurveSpec c = curve_from_state(fixed_state(2, d));
            DifferentialOnCurve phi1 = make_phi(c, PhiKind::Phi1);
            DifferentialOnCurve phi2 = make_phi(c, PhiKind::Phi2);
            cplx bp = 0.31 + 0.43 * d.tau;
            const int loops[6][3] = {{1, 0, 0}, {0, 1, 0}, {1, 0, 1},
                                     {0, 1, 1}, {1, 1, 0}, {-1, 1, 0}};
            double worst = 0.0;
            for (auto [a, b, sheet] : loops) {
                LiftedLoop loop{a, b, bp, sheet};
                worst = std::max(worst, phi_period(phi1, loop).deviation);
                worst = std::max(worst, phi_period(phi2, loop).deviation);
            }
            r.measured = worst;
            r.bound = 1e-6;
            r.pass = worst < r.bound;
        });
}

// --- criterion 8: the degree formula, both routes ---
CriterionResult criterion_degree(const SuiteConfig& cfg) {
    return run_one(
        8,
        "cover degree: sheet count equals the symplectic period pairing "
        "(= 2) on a smooth N=2 curve",
        [&](CriterionResult& r) {
            (void)cfg;
            EllipticData d = lattice_invariants(cplx(0.1, 1.1));
            int deg = degree_check(curve_from_state(fixed_state(2, d)));
            r.measured = double(deg);
            r.bound = 2.0;
            r.pass = deg == 2;
            r.detail =
                "pairing evaluated over every nonsingular 4-cycle subset of "
                "the constructed homology candidates; all agree";
        });
}

// --- criterion 9: eigenfunction PDE residual and the Bloch factor ---
CriterionResult criterion_ba_pde(const SuiteConfig& cfg) {
    return run_one(
        9,
        "eigenfunction PDE residual < 1e-4 on a 50x50 window for N in "
        "{1,2}, ~4x smaller at 100x100; Bloch factor x-independent to 1e-6",
        [&](CriterionResult& r) {
            EllipticData d = lattice_invariants(cfg.tau);
            double worst50 = 0.0;
            bool refine_ok = true;

            Eigen::VectorXcd x1(1), q1(1);
            x1 << cplx(0.3, 0.55);
            q1 << cplx(0.8, 0.3);
            Trajectory t1 = integrate(make_phase_point(x1, q1, d), 0.5, 1e-3);
            BaSolution b1 = ba_solution(t1, cplx(0.35, 0.42), 0);
            GridSpec g50a{cplx(-0.01, 0.1), 0.02 / 49, 50, 0.24, 0.02 / 49, 50};
            GridSpec g100a{cplx(-0.01, 0.1), 0.02 / 99, 100, 0.24, 0.02 / 99,
                           100};
            double r50a = ba_pde_residual(b1, g50a);
            refine_ok = refine_ok && ba_pde_residual(b1, g100a) < r50a / 2.5;
            worst50 = std::max(worst50, r50a);

            Eigen::VectorXcd x2(2), q2(2);
            x2 << cplx(0.2, 0.6), cplx(0.65, 0.3);
            q2 << cplx(0.5, -0.1), cplx(-0.4, 0.2);
            Trajectory t2 = integrate(make_phase_point(x2, q2, d), 0.5, 1e-3);
            BaSolution b2 = ba_solution(t2, cplx(0.4, 0.45), 0);
            GridSpec g50b{cplx(0.24, 0.05), 0.02 / 49, 50, 0.24, 0.02 / 49, 50};
            GridSpec g100b{cplx(0.24, 0.05), 0.02 / 99, 100, 0.24, 0.02 / 99,
                           100};
            double r50b = ba_pde_residual(b2, g50b);
            refine_ok = refine_ok && ba_pde_residual(b2, g100b) < r50b / 2.5;
            worst50 = std::max(worst50, r50b);

            double t = 0.25;
            cplx f1 = b2.psi(cplx(0.1, 0.85) + 1.0, t) /
                      b2.psi(cplx(0.1, 0.85), t);
            cplx f2 = b2.psi(cplx(0.6, 0.85) + 1.0, t) /
                      b2.psi(cplx(0.6, 0.85), t);
            double bloch = std::abs(f1 - f2) / std::abs(f1);

            r.measured = worst50;
            r.bound = 1e-4;
            r.pass = worst50 < r.bound && refine_ok && bloch < 1e-6;
            std::ostringstream os;
            os << "refinement " << (refine_ok ? "ok" : "FAILED")
               << ", Bloch-factor spread " << bloch;
            r.detail = os.str();
        });
}

// Synthetic nodal N=3 curve: equally spaced particles with equal momenta
// make the Lax matrix circulant, so the curve splits into three analytic
// eigenvalue branches; transversal branch crossings are honest nodes.
CurveSpec nodal_n3_curve(const EllipticData& d) {
    Eigen::VectorXcd x(3), q(3);
    cplx x0(0.11, 0.23), qq(0.4, 0.1);
    x << x0, x0 + 1.0 / 3.0, x0 + 2.0 / 3.0;
    q << qq, qq, qq;
    return curve_from_state(make_phase_point(x, q, d));
}

// --- criterion 10: singular-point census and the cusp/node bound ---
CriterionResult criterion_cusp_bound(const SuiteConfig& cfg) {
    return run_one(
        10,
        "census bound 2n + k < N on a smooth N=3 curve and a synthetic "
        "nodal N=3 curve; unclassified points force an inconclusive verdict",
        [&](CriterionResult& r) {
            (void)cfg;
            EllipticData d = lattice_invariants(cplx(0.0, 1.0));
            Eigen::VectorXcd I3(3);
            I3 << cplx(0.37, 0.11), cplx(-0.52, 0.23), cplx(0.14, -0.41);

            CensusReport smooth = singularity_census(curve_from_H(I3, d));
            CuspBoundVerdict vs = verify_cusp_bound(smooth);
            bool ok = vs.conclusive && vs.pass && vs.margin == 3 &&
                      smooth.nodes.empty() && smooth.cusps.empty();

            CensusReport nodal = singularity_census(nodal_n3_curve(d));
            CuspBoundVerdict vn = verify_cusp_bound(nodal);
            int nodal_margin = vn.margin;
            ok = ok && vn.conclusive && vn.pass && !nodal.nodes.empty() &&
                 nodal.cusps.empty() && nodal.unclassified.empty();

            // a report with an unclassified point must never pass
            CensusReport doctored = smooth;
            doctored.unclassified.push_back({cplx(0.1, 0.1), 0.0, "synthetic"});
            CuspBoundVerdict vd = verify_cusp_bound(doctored);
            ok = ok && !vd.conclusive && !vd.pass;

            r.measured = double(std::min(vs.margin, nodal_margin));
            r.bound = 0.0;  // margin must stay positive
            r.pass = ok && r.measured > r.bound;
            std::ostringstream os;
            os << "nodal census: " << nodal.nodes.size() << " nodes, margin "
               << nodal_margin;
            r.detail = os.str();
        });
}

// --- criterion 11: genus-1 real-period basis and disjoint zeros ---
CriterionResult criterion_base_case(const SuiteConfig& cfg) {
    return run_one(
        11,
        "real-period basis Psi_1, Psi_2 for 100 seeded lattices: periods "
        "real to 1e-10, zero sets disjoint; square lattice gives b1 = -pi, "
        "b2 = i*pi",
        [&](CriterionResult& r) {
            std::mt19937_64 rng(cfg.seed + 11);
            double worst = 0.0;
            bool disjoint = true;
            for (int t = 0; t < 100; ++t) {
                EllipticData d = lattice_invariants(random_tau(rng));
                auto [psi1, psi2] = torus_real_basis(d);
                for (const TorusDifferential& psi : {psi1, psi2}) {
                    auto [a, b] = torus_periods(psi);
                    worst = std::max(worst, std::abs(a.imag()));
                    worst = std::max(worst, std::abs(b.imag()));
                }
                disjoint = disjoint && base_case_check(psi1, psi2);
            }
            EllipticData sq = lattice_invariants(kI);
            auto [p1, p2] = torus_real_basis(sq);
            double closed = std::max(std::abs(p1.b - cplx(-pi)),
                                     std::abs(p2.b - kI * pi));
            r.measured = worst;
            r.bound = 1e-10;
            r.pass = worst < r.bound && disjoint && closed < 1e-8;
            std::ostringstream os;
            os << "square-lattice closed-form deviation " << closed
               << (disjoint ? "" : "; common zero detected");
            r.detail = os.str();
        });
}

// --- criterion 12: level-set leaves ---
CriterionResult criterion_level_sets(const SuiteConfig& cfg) {
    return run_one(
        12,
        "level-set leaves: Im F1 drift < 1e-6, Re F1 strictly monotone, "
        "saddle stops within 1e-4 of a zero of Psi_1",
        [&](CriterionResult& r) {
            (void)cfg;
            EllipticData d = lattice_invariants(kI);
            auto [psi1, psi2] = torus_real_basis(d);

            LevelSetPolyline leaf =
                trace_level_set(psi1, cplx(0.21, 0.33), 0.5);
            bool monotone = true;
            double drift = 0.0;
            for (size_t i = 0; i < leaf.f1.size(); ++i) {
                if (i > 0 && leaf.f1[i].real() <= leaf.f1[i - 1].real())
                    monotone = false;
                drift = std::max(drift, std::abs(leaf.f1[i].imag()));
            }

            std::vector<cplx> zeros = torus_zeros(psi1);
            cplx z0 = zeros[0];
            cplx A = 0.5 * weierstrass(z0, Kind::Pprime, d);
            cplx e = std::exp(0.5 * kI * (pi - std::arg(A)));
            LevelSetPolyline critical =
                trace_level_set(psi1, z0 - 0.01 * e, 1.0);
            double saddle_miss = 1.0;
            if (critical.saddle)
                saddle_miss = lattice_distance(*critical.saddle - z0, d);

            r.measured = drift;
            r.bound = 1e-6;
            r.pass = drift < r.bound && monotone && saddle_miss < 1e-4;
            std::ostringstream os;
            os << "saddle stop distance " << saddle_miss
               << (monotone ? "" : "; Re F1 not monotone");
            r.detail = os.str();
        });
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const SuiteConfig& cfg) {
    std::vector<CriterionResult> out;
    out.push_back(criterion_legendre(cfg));
    out.push_back(criterion_period_identities(cfg));
    out.push_back(criterion_lax(cfg));
    out.push_back(criterion_isospectral(cfg));
    out.push_back(criterion_laurent(cfg));
    out.push_back(criterion_fit_h(cfg));
    out.push_back(criterion_integer_periods(cfg));
    out.push_back(criterion_degree(cfg));
    out.push_back(criterion_ba_pde(cfg));
    out.push_back(criterion_cusp_bound(cfg));
    out.push_back(criterion_base_case(cfg));
    out.push_back(criterion_level_sets(cfg));
    return out;
}

std::string acceptance_report_json(const SuiteConfig& cfg,
                                   const std::vector<CriterionResult>& criteria,
                                   double wallclock_seconds) {
    nlohmann::ordered_json j;
    j["version"] = "1.0";
    j["config"] = {{"tau", {cfg.tau.real(), cfg.tau.imag()}},
                   {"n", cfg.n},
                   {"dt", cfg.dt},
                   {"t_end", cfg.t_end},
                   {"seed", cfg.seed},
                   {"tol", cfg.tol}};
    j["criteria"] = nlohmann::ordered_json::array();
    for (const CriterionResult& c : criteria)
        j["criteria"].push_back({{"id", c.id},
                                 {"description", c.description},
                                 {"measured", c.measured},
                                 {"bound", c.bound},
                                 {"pass", c.pass},
                                 {"detail", c.detail}});
    if (wallclock_seconds >= 0.0) j["wallclock_seconds"] = wallclock_seconds;
    return j.dump(2) + "\n";
}

CriterionResult determinism_criterion(
    const SuiteConfig& cfg, const std::vector<CriterionResult>& first) {
    CriterionResult r;
    r.id = 13;
    r.description =
        "determinism: a second full run with the same config serializes to "
        "a byte-identical report (wallclock excluded)";
    try {
        std::vector<CriterionResult> second = run_acceptance(cfg);
        std::string j1 = acceptance_report_json(cfg, first, -1.0);
        std::string j2 = acceptance_report_json(cfg, second, -1.0);
        bool same = j1 == j2;
        r.measured = same ? 0.0 : 1.0;
        r.bound = 0.5;
        r.pass = same;
        if (!same) r.detail = "reports differ between runs";
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    return r;
}

}  // namespace cmc
