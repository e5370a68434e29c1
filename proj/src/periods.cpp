#include "cmcurves/periods.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace cmc {

namespace {

using std::numbers::pi;
constexpr cplx iu{0.0, 1.0};

cplx phi_prefactor(PhiKind which, const EllipticData& data) {
    cplx denom = 2.0 * pi * iu;
    return which == PhiKind::Phi1 ? 1.0 / denom : data.tau / denom;
}

// Continue the root kcur of R(k, .) from za to zb, halving the step while
// the move is large next to the local root gap (same policy as the sheet
// tracker).
cplx continue_root(const CurveSpec& curve, cplx za, cplx zb, cplx kcur,
                   int depth = 0) {
    std::vector<cplx> r = poly::roots(char_poly(curve, zb));
    double d1 = 1e300, d2 = 1e300;
    int best = 0;
    for (int i = 0; i < int(r.size()); ++i) {
        double dist = std::abs(r[i] - kcur);
        if (dist < d1) {
            d2 = d1;
            d1 = dist;
            best = i;
        } else {
            d2 = std::min(d2, dist);
        }
    }
    if (r.size() > 1 && (d2 < 1e-6 || d1 > 0.4 * d2)) {
        if (depth > 24)
            throw BranchCrossingError("periods: root gap collapse on path", 0.0);
        cplx mid = 0.5 * (za + zb);
        cplx kmid = continue_root(curve, za, mid, kcur, depth + 1);
        return continue_root(curve, mid, zb, kmid, depth + 1);
    }
    return r[best];
}

// A closed lifted cycle: base polyline in the plane (base.front() and
// base.back() agree mod lattice) with the continued root at every vertex.
struct Cycle {
    std::vector<cplx> base;
    std::vector<cplx> kv;
};

// Lift the base polyline starting from root k0, repeating the traversal
// until the root returns to its start (at most max_reps times).
Cycle lift_closed(const CurveSpec& curve, const std::vector<cplx>& once, cplx k0,
                  int max_reps) {
    Cycle c;
    c.base.push_back(once.front());
    c.kv.push_back(k0);
    cplx shift = 0.0;
    for (int rep = 0; rep < max_reps; ++rep) {
        for (size_t i = 1; i < once.size(); ++i) {
            cplx za = c.base.back();
            cplx zb = once[i] + shift;
            c.kv.push_back(continue_root(curve, za, zb, c.kv.back()));
            c.base.push_back(zb);
        }
        shift += once.back() - once.front();
        if (std::abs(c.kv.back() - k0) < 1e-7) return c;
    }
    throw ConsistencyError(
        "periods: lifted loop failed to close within the cover degree");
}

// Integral of (wp - c) dz along the plane polyline, exact per segment via
// the antiderivative -zeta (single-valued on the plane).
cplx wp_minus_c_integral(const std::vector<cplx>& base, cplx c,
                         const EllipticData& data) {
    cplx za = base.front(), zb = base.back();
    cplx total = weierstrass(za, Kind::Zeta, data) -
                 weierstrass(zb, Kind::Zeta, data) - c * (zb - za);
    return total;
}

cplx cycle_period(const DifferentialOnCurve& diff, const Cycle& c) {
    cplx dk = c.kv.back() - c.kv.front();
    cplx base_int = wp_minus_c_integral(c.base, diff.c, diff.curve.data);
    return phi_prefactor(diff.which, diff.curve.data) * (dk - base_int);
}

PeriodResult finish_period(cplx value) {
    PeriodResult out;
    out.value = value;
    out.nearest = std::lround(value.real());
    out.deviation = std::abs(value - cplx(double(out.nearest)));
    out.is_integer = out.deviation < 1e-6;
    return out;
}

// ---- homology machinery for the N = 2 degree check ----

// Zeros mod lattice of the k-discriminant r1^2 - 4 r2 of the quadratic
// char poly, by Newton from a deterministic grid of starts.
std::vector<cplx> branch_points(const CurveSpec& curve) {
    const EllipticData& d = curve.data;
    auto disc = [&](cplx z) {
        poly::Coeffs c = char_poly(curve, z);
        return c[1] * c[1] - 4.0 * c[0];
    };
    std::vector<cplx> found;
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) {
            cplx z = (0.1 + 0.2 * a + 0.013) + (0.1 + 0.2 * b + 0.017) * d.tau;
            bool ok = true;
            for (int it = 0; it < 60; ++it) {
                if (lattice_distance(z, d) < 0.03) {
                    ok = false;
                    break;
                }
                cplx f = disc(z);
                double h = 1e-6;
                cplx df = (disc(z + h) - disc(z - h)) / (2.0 * h);
                if (std::abs(df) < 1e-14) {
                    ok = false;
                    break;
                }
                cplx step = f / df;
                if (std::abs(step) > 0.2) step *= 0.2 / std::abs(step);
                z -= step;
                if (std::abs(f) < 1e-11 && std::abs(step) < 1e-10) break;
                if (it == 59) ok = false;
            }
            if (!ok || std::abs(disc(z)) > 1e-9) continue;
            cplx z0 = reduce_mod_lattice(z, d).z0;
            bool dup = false;
            for (cplx w : found)
                if (lattice_distance(z0 - w, d) < 1e-6) dup = true;
            if (!dup) found.push_back(z0);
        }
    }
    std::sort(found.begin(), found.end(), [](cplx a, cplx b) {
        if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return found;
}

// Dumbbell base polyline: full circle around b1, corridor to b2, full
// circle around b2, corridor back. Monodromy swap*swap = identity, so it
// lifts closed on each sheet.
std::vector<cplx> dumbbell_polyline(cplx b1, cplx b2, const EllipticData& data) {
    cplx w = (b2 - b1) / std::abs(b2 - b1);
    double rho = std::clamp(0.25 * std::abs(b2 - b1), 0.008, 0.06);
    // corridor offset so the two passes never overlap
    cplx n = iu * w * std::min(0.004, 0.2 * rho);
    std::vector<cplx> pts;
    auto circle = [&](cplx center, cplx from) {
        cplx rad = from - center;
        for (int s = 1; s <= 48; ++s)
            pts.push_back(center + rad * std::exp(2.0 * pi * iu * (double(s) / 48)));
    };
    auto corridor = [&](cplx from, cplx to, cplx offset) {
        for (int s = 1; s <= 24; ++s) {
            double t = double(s) / 24;
            cplx p = from + (to - from) * t + offset * std::sin(pi * t);
            pts.push_back(p);
        }
    };
    cplx a1 = b1 + rho * w, a2 = b2 - rho * w;
    pts.push_back(a1);
    circle(b1, a1);
    corridor(a1, a2, n);
    circle(b2, a2);
    corridor(a2, a1, -n);
    for (cplx p : pts)
        if (lattice_distance(p, data) < 0.02)
            throw UnsupportedCurveError(
                "degree_check: dumbbell path runs too close to the lattice");
    return pts;
}

// Stadium contour enclosing both branch points (and nothing else): trivial
// monodromy, lifts closed on each sheet; the homology dual of the dumbbell.
std::vector<cplx> stadium_polyline(cplx b1, cplx b2, double rho,
                                   const EllipticData& data) {
    cplx w = (b2 - b1) / std::abs(b2 - b1);
    cplx nh = iu * w;
    std::vector<cplx> pts;
    auto straight = [&](cplx from, cplx to) {
        for (int s = 1; s <= 40; ++s)
            pts.push_back(from + (to - from) * (double(s) / 40));
    };
    auto cap = [&](cplx center, cplx from, cplx to) {
        cplx r1 = from - center, r2 = to - center;
        double a1 = std::arg(r1), da = std::remainder(std::arg(r2) - a1, 2 * pi);
        if (da <= 0) da += 2 * pi;  // counterclockwise
        for (int s = 1; s <= 24; ++s)
            pts.push_back(center +
                          std::abs(r1) * std::exp(iu * (a1 + da * double(s) / 24)));
    };
    pts.push_back(b1 - rho * nh);
    straight(b1 - rho * nh, b2 - rho * nh);
    cap(b2, b2 - rho * nh, b2 + rho * nh);
    straight(b2 + rho * nh, b1 + rho * nh);
    cap(b1, b1 + rho * nh, b1 - rho * nh);
    for (cplx p : pts)
        if (lattice_distance(p, data) < 0.02)
            throw UnsupportedCurveError(
                "degree_check: stadium path runs too close to the lattice");
    return pts;
}

// Oriented crossing number of two cycles on E: crossings of the base
// polylines (each segment of b translated next to the segment of a being
// tested) counted with the sign of the tangent cross product, and only
// when the two lifts sit on the same root there.
int intersection_number(const CurveSpec& curve, const Cycle& A, const Cycle& B) {
    const EllipticData& d = curve.data;
    double im_tau = d.tau.imag();
    int total = 0;
    for (size_t i = 0; i + 1 < A.base.size(); ++i) {
        cplx pa = A.base[i], da = A.base[i + 1] - pa;
        for (size_t j = 0; j + 1 < B.base.size(); ++j) {
            cplx pb = B.base[j], db = B.base[j + 1] - pb;
            // translate segment b so its midpoint lands nearest a's midpoint
            cplx diff = (pa + 0.5 * da) - (pb + 0.5 * db);
            double nn = diff.imag() / im_tau;
            long n = std::lround(nn);
            double mm = (diff - double(n) * d.tau).real();
            long m = std::lround(mm);
            cplx t = double(m) + double(n) * d.tau;
            cplx qb = pb + t;
            // solve pa + s*da = qb + u*db for s, u
            double cx = da.real() * db.imag() - da.imag() * db.real();
            if (std::abs(cx) < 1e-14) continue;
            cplx rhs = qb - pa;
            double s = (rhs.real() * db.imag() - rhs.imag() * db.real()) / cx;
            double u = (rhs.real() * da.imag() - rhs.imag() * da.real()) / cx;
            // half-open in both parameters, with a guard band so a crossing
            // sitting on a shared vertex is claimed by exactly one segment
            // (u = 1 - eps here and u = +eps on the successor would double
            // count it otherwise)
            constexpr double eps = 1e-9;
            if (s < 0.0 || s >= 1.0 - eps || u < 0.0 || u >= 1.0 - eps)
                continue;
            cplx zx = pa + s * da;
            // sheet comparison at the crossing by root continuation from the
            // segment start (linear interpolation of k is unreliable where
            // the root gap is small, e.g. near the branch cut)
            cplx ka = continue_root(curve, pa, zx, A.kv[i]);
            cplx kb = continue_root(curve, qb, zx, B.kv[j]);
            std::vector<cplx> roots = poly::roots(char_poly(curve, zx));
            double gap = 1e300;
            for (size_t r = 0; r < roots.size(); ++r)
                for (size_t q = r + 1; q < roots.size(); ++q)
                    gap = std::min(gap, std::abs(roots[r] - roots[q]));
            if (std::abs(ka - kb) > 0.5 * gap) continue;
            total += (cx > 0) ? 1 : -1;
        }
    }
    return total;
}

std::vector<cplx> segment_polyline(cplx from, cplx to, int steps) {
    std::vector<cplx> pts;
    for (int s = 0; s <= steps; ++s)
        pts.push_back(from + (to - from) * (double(s) / steps));
    return pts;
}

double degree_pairing_n2(const CurveSpec& curve) {
    const EllipticData& d = curve.data;
    std::vector<cplx> bp = branch_points(curve);
    if (bp.size() != 2)
        throw UnsupportedCurveError(
            "degree_check: expected exactly 2 branch points for N = 2, found " +
            std::to_string(bp.size()));

    // candidate cycles: lifts of the two base loops from each sheet, the
    // two dumbbell lifts, and a diagonal-loop lift as a spare
    std::vector<Cycle> cand;
    std::vector<int> group;                    // base-loop group per cycle
    std::vector<std::pair<int, int>> gclass;   // homology class (m, n) per group
    auto add_loop_lifts = [&](const std::vector<cplx>& once, int m, int n) {
        std::vector<cplx> roots = poly::roots(char_poly(curve, once.front()));
        std::vector<Cycle> lifts;
        for (cplx k0 : roots) {
            bool seen = false;
            for (const Cycle& c : lifts)
                for (size_t i = 0; i < c.kv.size(); ++i)
                    if (std::abs(c.kv[i] - k0) < 1e-6 &&
                        lattice_distance(c.base[i] - once.front(), d) < 1e-9)
                        seen = true;
            if (seen) continue;  // a multi-rep lift already passes through this root
            lifts.push_back(lift_closed(curve, once, k0, curve.N));
        }
        gclass.emplace_back(m, n);
        for (Cycle& c : lifts) {
            cand.push_back(std::move(c));
            group.push_back(int(gclass.size()) - 1);
        }
    };
    cplx pA = 0.311 + 0.413 * d.tau;
    cplx pB = 0.352 + 0.238 * d.tau;
    add_loop_lifts(segment_polyline(pA, pA + 1.0, 160), 1, 0);
    add_loop_lifts(segment_polyline(pB, pB + d.tau, 160), 0, 1);
    // choose the branch-point translate pair giving the shortest cut that
    // stays clear of the lattice
    cplx b1 = bp[0];
    cplx best_b2;
    double best_len = 1e300;
    for (int m = -1; m <= 1; ++m)
        for (int n = -1; n <= 1; ++n) {
            cplx b2 = bp[1] + double(m) + double(n) * d.tau;
            double clear = 1e300;
            for (int s = 0; s <= 40; ++s)
                clear = std::min(clear, lattice_distance(
                                            b1 + (b2 - b1) * (double(s) / 40), d));
            if (clear < 0.12) continue;
            if (std::abs(b2 - b1) < best_len) {
                best_len = std::abs(b2 - b1);
                best_b2 = b2;
            }
        }
    if (best_len > 1e299)
        throw UnsupportedCurveError(
            "degree_check: no lattice-clear branch cut found");
    std::vector<cplx> dumbbell = dumbbell_polyline(b1, best_b2, d);
    add_loop_lifts(dumbbell, 0, 0);
    double rho = std::clamp(0.25 * best_len, 0.008, 0.06);
    add_loop_lifts(stadium_polyline(b1, best_b2, rho + std::max(0.015, rho), d),
                   0, 0);
    add_loop_lifts(segment_polyline(pA + 0.013, pA + 0.013 + 1.0 + d.tau, 220),
                   1, 1);

    // loops routed through the midpoint of the cut: these cross the branch
    // cut, so they are the cycles that pair with the dumbbell lifts
    cplx cutmid = 0.5 * (b1 + best_b2);
    auto detour_loop = [&](cplx thru, cplx step, cplx off) -> std::vector<cplx> {
        auto build = [&](cplx o) {
            // basepoint far from the cut; the loop passes through `thru`
            // (between the branch points) halfway along
            std::vector<cplx> anchors{thru + 0.7 * step + o,
                                      thru + 0.85 * step,
                                      thru + step,
                                      thru + 1.15 * step,
                                      thru + 1.3 * step + o,
                                      thru + 1.7 * step + o};
            std::vector<cplx> pts{anchors.front()};
            for (size_t i = 1; i < anchors.size(); ++i)
                for (int s = 1; s <= 40; ++s)
                    pts.push_back(anchors[i - 1] +
                                  (anchors[i] - anchors[i - 1]) * (double(s) / 40));
            return pts;
        };
        std::vector<cplx> best;
        double best_clear = -1.0;
        for (cplx o : {off, -off}) {
            std::vector<cplx> pts = build(o);
            double clear = 1e300;
            for (cplx p : pts) clear = std::min(clear, lattice_distance(p, d));
            // the cut itself is allowed closer than the lattice guard
            if (clear > best_clear) {
                best_clear = clear;
                best = std::move(pts);
            }
        }
        if (best_clear < 0.05) best.clear();
        return best;
    };
    // through-points separated along the cut so the two loops do not cross
    // each other right where the sheets nearly collide
    std::vector<cplx> mid_a =
        detour_loop(cutmid + 0.25 * (best_b2 - b1), 1.0, 0.3 * d.tau);
    std::vector<cplx> mid_b =
        detour_loop(cutmid - 0.25 * (best_b2 - b1), d.tau, 0.3);
    if (!mid_a.empty()) add_loop_lifts(mid_a, 1, 0);
    if (!mid_b.empty()) add_loop_lifts(mid_b, 0, 1);

    int nc = int(cand.size());
    if (nc < 4)
        throw UnsupportedCurveError("degree_check: too few independent cycles");
    Eigen::MatrixXd omega_all = Eigen::MatrixXd::Zero(nc, nc);
    for (int i = 0; i < nc; ++i)
        for (int j = i + 1; j < nc; ++j) {
            int x = intersection_number(curve, cand[i], cand[j]);
            omega_all(i, j) = x;
            omega_all(j, i) = -x;
        }
    // exact screen on the crossing counts: the lifts of one base loop pass
    // every base point once per sheet, so for two base loops the matched
    // crossings summed over both lift groups must equal N times the signed
    // homology cross number of the base classes. A violation pinpoints a
    // miscounted crossing; cycles from the offending group pair are then
    // kept out of the same pairing subset.
    int ng = int(gclass.size());
    std::vector<std::vector<bool>> groupok(ng, std::vector<bool>(ng, true));
    for (int g = 0; g < ng; ++g)
        for (int h = g + 1; h < ng; ++h) {
            double sum = 0.0;
            for (int i = 0; i < nc; ++i)
                for (int j = 0; j < nc; ++j)
                    if (group[i] == g && group[j] == h) sum += omega_all(i, j);
            double want = double(curve.N) *
                          (gclass[g].first * gclass[h].second -
                           gclass[g].second * gclass[h].first);
            if (std::abs(sum - want) > 0.5)
                groupok[g][h] = groupok[h][g] = false;
        }
    DifferentialOnCurve phi1 = make_phi(curve, PhiKind::Phi1);
    DifferentialOnCurve phi2 = make_phi(curve, PhiKind::Phi2);
    Eigen::VectorXcd u(nc), v(nc);
    for (int i = 0; i < nc; ++i) {
        u[i] = cycle_period(phi1, cand[i]);
        v[i] = cycle_period(phi2, cand[i]);
    }
    // the pairing u^T Omega^{-1} v is invariant under change of basis of
    // the spanned sublattice, so every nonsingular 4-subset must report
    // the same number; disagreement flags a miscounted crossing. The
    // determinant of an antisymmetric integer matrix is a perfect square
    // (Pfaffian squared), which screens corrupted subsets.
    std::vector<double> pairings;
    std::vector<int> idx(4);
    for (idx[0] = 0; idx[0] < nc; ++idx[0])
        for (idx[1] = idx[0] + 1; idx[1] < nc; ++idx[1])
            for (idx[2] = idx[1] + 1; idx[2] < nc; ++idx[2])
                for (idx[3] = idx[2] + 1; idx[3] < nc; ++idx[3]) {
                    bool clean = true;
                    for (int r = 0; r < 4 && clean; ++r)
                        for (int c = r + 1; c < 4; ++c)
                            clean = clean &&
                                    groupok[group[idx[r]]][group[idx[c]]];
                    if (!clean) continue;
                    Eigen::Matrix4d om;
                    Eigen::Vector4cd uu, vv;
                    for (int r = 0; r < 4; ++r) {
                        uu[r] = u[idx[r]];
                        vv[r] = v[idx[r]];
                        for (int c = 0; c < 4; ++c)
                            om(r, c) = omega_all(idx[r], idx[c]);
                    }
                    double det = om.determinant();
                    if (det < 0.5) continue;
                    double pf = std::sqrt(det);
                    if (std::abs(pf - std::lround(pf)) > 1e-9) continue;
                    Eigen::Vector4cd w = om.cast<cplx>().fullPivLu().solve(vv);
                    cplx p = uu.transpose() * w;
                    if (std::abs(p.imag()) > 1e-6) continue;
                    pairings.push_back(std::abs(p.real()));
                }
    if (pairings.empty())
        throw UnsupportedCurveError(
            "degree_check: no nonsingular 4-cycle intersection matrix found");
    for (double p : pairings)
        if (std::abs(p - pairings.front()) > 1e-6)
            throw ConsistencyError(
                "degree_check: period pairing differs between homology bases");
    return pairings.front();
}

}  // namespace

DifferentialOnCurve make_phi(const CurveSpec& curve, PhiKind which) {
    auto [c1, c2] = c_constants(curve.data);
    return {curve, which, which == PhiKind::Phi1 ? c1 : c2};
}

PeriodResult phi_period(const DifferentialOnCurve& diff, const LiftedLoop& loop) {
    const CurveSpec& curve = diff.curve;
    const EllipticData& d = curve.data;

    std::vector<cplx> start_roots = poly::roots(char_poly(curve, loop.basepoint));
    if (loop.sheet < 0 || loop.sheet >= int(start_roots.size()))
        throw DomainError("phi_period: sheet index out of range");

    // repeat the base word until the sheet closes (at most N times)
    int reps = 0;
    LiftedLoop cur = loop;
    cplx k_end;
    for (int r = 1; r <= curve.N; ++r) {
        SheetTrack t = sheet_track(curve, cur);
        ++reps;
        k_end = t.k;
        if (t.sheet == loop.sheet) break;
        cur.sheet = t.sheet;
        if (r == curve.N)
            throw ConsistencyError(
                "phi_period: sheet failed to close within the cover degree");
    }
    cplx dk = k_end - start_roots[loop.sheet];

    auto f = [&](cplx z) { return weierstrass(z, Kind::P, d) - diff.c; };
    cplx base_int = 0.0;
    cplx p = loop.basepoint;
    if (loop.a != 0)
        base_int += segment_integral(f, {p, p + double(loop.a)});
    if (loop.b != 0)
        base_int += segment_integral(
            f, {p + double(loop.a), p + double(loop.a) + double(loop.b) * d.tau});

    PeriodResult out = finish_period(phi_prefactor(diff.which, d) *
                                     (dk - double(reps) * base_int));
    out.repetitions = reps;
    return out;
}

int degree_check(const CurveSpec& curve) {
    if (curve.N > 3)
        throw UnsupportedCurveError("degree_check: N <= 3 only");
    cplx z = 0.317 + 0.441 * curve.data.tau;
    std::vector<cplx> roots = poly::roots(char_poly(curve, z));
    for (size_t i = 0; i < roots.size(); ++i)
        for (size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) < 1e-8)
                throw UnsupportedCurveError(
                    "degree_check: coincident sheets at the probe point");
    int sheet_count = int(roots.size());
    if (sheet_count != curve.N)
        throw ConsistencyError("degree_check: sheet count differs from N");

    if (curve.N == 2) {
        double pairing = degree_pairing_n2(curve);
        if (std::abs(pairing - double(curve.N)) > 1e-4)
            throw ConsistencyError(
                "degree_check: period pairing " + std::to_string(pairing) +
                " disagrees with the sheet count " + std::to_string(curve.N));
    }
    return sheet_count;
}

std::pair<cplx, cplx> torus_periods(const TorusDifferential& psi) {
    return {-2.0 * psi.scale * psi.data.eta1 + psi.b,
            -2.0 * psi.scale * psi.data.eta2 + psi.b * psi.data.tau};
}

std::pair<TorusDifferential, TorusDifferential> torus_real_basis(
    const EllipticData& data) {
    if (data.tau.imag() <= 0.0)
        throw DomainError("torus_real_basis: Im tau must be positive");
    auto solve_b = [&](cplx scale) {
        // Im b = Im(2 scale eta1);  Re b Im tau + Im b Re tau = Im(2 scale eta2)
        double s1 = (2.0 * scale * data.eta1).imag();
        double s2 = (2.0 * scale * data.eta2).imag();
        double im_b = s1;
        double re_b = (s2 - im_b * data.tau.real()) / data.tau.imag();
        return cplx(re_b, im_b);
    };
    TorusDifferential psi1{data, solve_b(1.0), 1.0};
    TorusDifferential psi2{data, solve_b(iu), iu};
    return {psi1, psi2};
}

std::vector<cplx> torus_zeros(const TorusDifferential& psi) {
    const EllipticData& d = psi.data;
    cplx target = -psi.b / psi.scale;  // solve wp(z) = target
    for (cplx hp : {cplx(0.5), 0.5 * d.tau, 0.5 + 0.5 * d.tau}) {
        if (std::abs(weierstrass(hp, Kind::P, d) - target) < 1e-8)
            return {hp, hp};  // double zero at a half-period, reported unrefined
    }
    auto newton_from = [&](cplx z) -> std::optional<cplx> {
        for (int it = 0; it < 80; ++it) {
            if (lattice_distance(z, d) < 0.02) return std::nullopt;
            cplx f = weierstrass(z, Kind::P, d) - target;
            cplx df = weierstrass(z, Kind::Pprime, d);
            if (std::abs(df) < 1e-12) return std::nullopt;
            cplx step = f / df;
            if (std::abs(step) > 0.15) step *= 0.15 / std::abs(step);
            z -= step;
            if (std::abs(f) < 1e-10 && std::abs(step) < 1e-11)
                return reduce_mod_lattice(z, d).z0;
        }
        return std::nullopt;
    };
    const double fracs[8][2] = {{0.2, 0.2}, {0.7, 0.2}, {0.2, 0.7}, {0.7, 0.7},
                                {0.35, 0.55}, {0.55, 0.35}, {0.15, 0.45},
                                {0.45, 0.15}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<cplx> zeros;
        int grid = attempt == 0 ? 8 : 25;
        for (int s = 0; s < grid; ++s) {
            cplx z0 = attempt == 0
                          ? fracs[s][0] + fracs[s][1] * d.tau
                          : (0.1 + 0.16 * (s % 5) + 0.013) +
                                (0.1 + 0.16 * (s / 5) + 0.017) * d.tau;
            auto z = newton_from(z0);
            if (!z) continue;
            if (std::abs(weierstrass(*z, Kind::P, d) - target) > 1e-9) continue;
            bool dup = false;
            for (cplx w : zeros)
                if (lattice_distance(*z - w, d) < 1e-6) dup = true;
            if (!dup) zeros.push_back(*z);
            if (zeros.size() == 2) break;
        }
        if (zeros.size() == 2) {
            std::sort(zeros.begin(), zeros.end(), [](cplx a, cplx b) {
                if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
                return a.imag() < b.imag();
            });
            return zeros;
        }
    }
    throw SearchError("torus_zeros: Newton failed from all starting points");
}

bool base_case_check(const TorusDifferential& psi1,
                     const TorusDifferential& psi2) {
    cplx level1 = -psi1.b / psi1.scale;
    cplx level2 = -psi2.b / psi2.scale;
    if (std::abs(level1 - level2) <= 1e-6) return false;
    std::vector<cplx> z1 = torus_zeros(psi1);
    std::vector<cplx> z2 = torus_zeros(psi2);
    for (cplx a : z1)
        for (cplx b : z2)
            if (lattice_distance(a - b, psi1.data) <= 1e-6) return false;
    return true;
}

bool base_case_check(const EllipticData& data) {
    auto [psi1, psi2] = torus_real_basis(data);
    return base_case_check(psi1, psi2);
}

LevelSetPolyline trace_level_set(const TorusDifferential& psi1, cplx start,
                                 double arc_length) {
    const EllipticData& d = psi1.data;
    if (lattice_distance(start, d) < 1e-2)
        throw DomainError("trace_level_set: start inside the pole guard");
    std::vector<cplx> zeros = torus_zeros(psi1);
    auto zero_distance = [&](cplx z) {
        double best = 1e300;
        for (cplx w : zeros) best = std::min(best, lattice_distance(z - w, d));
        return best;
    };
    if (zero_distance(start) < 1e-3)
        throw DomainError("trace_level_set: start inside the saddle guard");

    auto vel = [&](cplx z) { return 1.0 / psi1.eval(z); };

    LevelSetPolyline leaf;
    leaf.s.push_back(0.0);
    leaf.points.push_back(start);
    leaf.f1.push_back(0.0);

    double s = 0.0;
    cplx z = start;
    const double h_base = 1e-3;
    while (s < arc_length) {
        if (lattice_distance(z, d) < 1e-2) {
            leaf.closed_through_pole = true;
            break;
        }
        double dz0 = zero_distance(z);
        if (dz0 < 1e-3) {
            // Newton-refine the zero of psi_1 the flow ran into
            cplx w = z;
            for (int it = 0; it < 50; ++it) {
                cplx f = psi1.eval(w);
                cplx df = psi1.scale * weierstrass(w, Kind::Pprime, d);
                w -= f / df;
                if (std::abs(f) < 1e-12) break;
            }
            leaf.saddle = reduce_mod_lattice(w, d).z0;
            break;
        }
        // cap the spatial move: |dz| per step at most a fifth of the
        // distance to the nearest zero (the speed 1/psi_1 diverges there)
        double speed = std::abs(vel(z));
        double h = std::min({h_base, arc_length - s, 0.2 * dz0 / speed});
        cplx k1 = vel(z);
        cplx k2 = vel(z + 0.5 * h * k1);
        cplx k3 = vel(z + 0.5 * h * k2);
        cplx k4 = vel(z + h * k3);
        cplx znew = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        cplx df1 = segment_integral([&](cplx w) { return psi1.eval(w); },
                                    {z, znew});
        z = znew;
        s += h;
        leaf.s.push_back(s);
        leaf.points.push_back(z);
        leaf.f1.push_back(leaf.f1.back() + df1);
    }
    return leaf;
}

std::string level_set_csv(const LevelSetPolyline& leaf) {
    std::ostringstream os;
    os.precision(15);
    os << "s, re_z, im_z, re_F1, im_F1\n";
    for (size_t i = 0; i < leaf.points.size(); ++i)
        os << leaf.s[i] << ", " << leaf.points[i].real() << ", "
           << leaf.points[i].imag() << ", " << leaf.f1[i].real() << ", "
           << leaf.f1[i].imag() << "\n";
    return os.str();
}

std::string period_json(const LiftedLoop& loop, PhiKind which,
                        const PeriodResult& period) {
    nlohmann::ordered_json j;
    j["loop"] = {{"a", loop.a}, {"b", loop.b}, {"sheet", loop.sheet}};
    j["differential"] = which == PhiKind::Phi1 ? "phi1" : "phi2";
    j["period"] = {period.value.real(), period.value.imag()};
    j["nearest_int"] = period.nearest;
    j["deviation"] = period.deviation;
    return j.dump(2);
}

}  // namespace cmc
