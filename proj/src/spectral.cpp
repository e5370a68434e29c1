#include "cmcurves/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

namespace cmc {

namespace {

using std::numbers::pi;
const cplx I1{0.0, 1.0};

// det(kI + L) coefficients via the characteristic recursion on -L.
poly::Coeffs char_poly_recursion(const Eigen::MatrixXcd& L) {
    int n = int(L.rows());
    Eigen::MatrixXcd A = -L;
    poly::Coeffs c = poly::Coeffs::Zero(n + 1);
    c[n] = 1.0;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n);
    for (int j = 1; j <= n; ++j) {
        M = A * M;
        cplx cj = -M.trace() / double(j);
        c[n - j] = cj;
        M.diagonal().array() += cj;
    }
    return c;
}

// Same coefficients from determinant samples on a circle of k values.
poly::Coeffs char_poly_sampled(const Eigen::MatrixXcd& L) {
    int n = int(L.rows());
    double r = 2.0 + L.norm();
    Eigen::MatrixXcd V(n + 1, n + 1);
    Eigen::VectorXcd d(n + 1);
    for (int s = 0; s <= n; ++s) {
        cplx k = r * std::exp(2.0 * pi * I1 * (double(s) / (n + 1)));
        cplx p = 1.0;
        for (int j = 0; j <= n; ++j) {
            V(s, j) = p;
            p *= k;
        }
        d[s] = (k * Eigen::MatrixXcd::Identity(n, n) + L).fullPivLu().determinant();
    }
    return V.fullPivLu().solve(d);
}

// The Lax matrix conjugated by diag(exp(zeta(z) x_i)): same characteristic
// polynomial, but the off-diagonal exponential factors exp(zeta(z) x_ij)
// cancel, so the entries stay polynomially bounded as z -> 0 instead of
// blowing up like exp(x/z).
Eigen::MatrixXcd gauged_lax(const PhasePoint& s, cplx z) {
    int n = s.n();
    const EllipticData& d = s.data;
    cplx sz = weierstrass(z, Kind::Sigma, d);
    Eigen::MatrixXcd L(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = 0.5 * s.q[i];
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            cplx x = s.x[i] - s.x[j];
            L(i, j) = weierstrass(z - x, Kind::Sigma, d) /
                      (sz * weierstrass(x, Kind::Sigma, d));
        }
    }
    return L;
}

double binom(int n, int k) {
    double b = 1.0;
    for (int j = 0; j < k; ++j) b = b * double(n - j) / double(j + 1);
    return b;
}

// Polynomial coefficients (in k, ascending) of the H-backed curve at z.
poly::Coeffs h_backed_coeffs(const Eigen::VectorXcd& I, const EllipticData& data,
                             cplx z) {
    int n = int(I.size());
    poly::Coeffs hc = poly::Coeffs::Zero(n + 1);
    hc[n] = 1.0;
    for (int i = 0; i < n; ++i) hc[i] = I[i];

    std::vector<cplx> sd = sigma_z_derivs(z, n, data);
    cplx sigma = sd[0];
    if (std::abs(sigma) < data.pole_eps)
        throw PoleError("h_backed_coeffs: z too close to the lattice",
                        z - reduce_mod_lattice(z, data).z0);

    // f as a polynomial in phi: sum_m (-1)^m (sigma^(m)/m!/sigma) * H^(m),
    // i.e. f(phi,z) = sigma(z - d/dphi) H(phi) / sigma(z). The alternating
    // sign together with phi = k + zeta(z) below is what matches the
    // determinant curve det(kI + L): the parity-flipped variant (all-plus
    // weights with phi = k - zeta) matches det(kI - L) instead, which
    // differs from this one exactly by I_i -> (-1)^(N-i) I_i and first
    // deviates at N = 3 through the sign of the P'(z) term in r_3.
    poly::Coeffs fc = poly::Coeffs::Zero(n + 1);
    poly::Coeffs hm = hc;
    double fact = 1.0;
    double sign = 1.0;
    for (int m = 0; m <= n; ++m) {
        if (m > 0) {
            hm = poly::derivative(hm);
            fact *= m;
            sign = -sign;
        }
        cplx w = sign * sd[m] / (fact * sigma);
        for (int j = 0; j < hm.size(); ++j) fc[j] += w * hm[j];
    }

    // substitute phi = k + zeta(z)
    cplx zeta = weierstrass(z, Kind::Zeta, data);
    poly::Coeffs rc = poly::Coeffs::Zero(n + 1);
    for (int j = 0; j <= n; ++j) {
        cplx p = 1.0;
        for (int m = j; m >= 0; --m) {
            rc[m] += fc[j] * binom(j, m) * p;
            p *= zeta;
        }
    }
    return rc;
}

// nth z-derivatives of an analytic function by Cauchy integration on a
// small circle; returns g, g', g'', ... up to n_max.
std::vector<cplx> cauchy_derivs(const std::function<cplx(cplx)>& g, cplx z0,
                                double radius, int n_max, int nodes = 32) {
    std::vector<cplx> vals(nodes);
    for (int s = 0; s < nodes; ++s)
        vals[s] = g(z0 + radius * std::exp(2.0 * pi * I1 * (double(s) / nodes)));
    std::vector<cplx> out(n_max + 1);
    double fact = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) fact *= n;
        cplx acc = 0.0;
        for (int s = 0; s < nodes; ++s)
            acc += vals[s] * std::exp(-2.0 * pi * I1 * (double(n * s) / nodes));
        out[n] = acc * fact / (double(nodes) * std::pow(radius, n));
    }
    return out;
}

}  // namespace

CurveSpec curve_from_state(const PhasePoint& s) {
    CurveSpec c;
    c.N = s.n();
    c.state = s;
    c.data = s.data;
    return c;
}

CurveSpec curve_from_H(const Eigen::VectorXcd& I, const EllipticData& data) {
    if (I.size() < 1 || I.size() > 8)
        throw DomainError("curve_from_H: need 1..8 coefficients");
    CurveSpec c;
    c.N = int(I.size());
    c.I = I;
    c.data = data;
    return c;
}

poly::Coeffs char_poly(const CurveSpec& curve, cplx z) {
    if (lattice_distance(z, curve.data) < 1e-6)
        throw PoleError("char_poly: z on the lattice", z);
    if (!curve.det_backed()) return h_backed_coeffs(*curve.I, curve.data, z);

    Eigen::MatrixXcd L = gauged_lax(*curve.state, z);
    poly::Coeffs c = char_poly_recursion(L);
    if (curve.N <= 4) {
        poly::Coeffs cs = char_poly_sampled(L);
        double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        if ((c - cs).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw ConsistencyError(
                "char_poly: recursion and sampled-determinant paths disagree");
    }
    return c;
}

cplx curve_eval(const CurveSpec& curve, cplx k, cplx z) {
    if (curve.det_backed()) {
        Eigen::MatrixXcd L = gauged_lax(*curve.state, z);
        int n = int(L.rows());
        return (k * Eigen::MatrixXcd::Identity(n, n) + L).fullPivLu().determinant();
    }
    return poly::eval(h_backed_coeffs(*curve.I, curve.data, z), k);
}

double isospectral_drift(const Trajectory& traj, cplx z) {
    if (traj.states.empty()) throw DomainError("isospectral_drift: empty trajectory");
    poly::Coeffs r0 = char_poly(curve_from_state(traj.states.front()), z);
    double worst = 0.0;
    for (const PhasePoint& s : traj.states) {
        poly::Coeffs r = char_poly(curve_from_state(s), z);
        for (int i = 0; i < r.size() - 1; ++i)
            worst = std::max(worst,
                             std::abs(r[i] - r0[i]) / (1.0 + std::abs(r0[i])));
    }
    return worst;
}

std::vector<LaurentPair> leading_laurent(const CurveSpec& curve) {
    int n = curve.N;
    const cplx z0{0.37, 0.21};
    constexpr int kLevels = 8;

    // roots tracked through z = z0 * 2^-m, matched on the slowly varying
    // product k*z ~ a + h*z
    std::vector<std::vector<cplx>> ks(kLevels);
    std::vector<cplx> zs(kLevels);
    for (int m = 0; m < kLevels; ++m) {
        zs[m] = z0 / double(1 << m);
        ks[m] = poly::roots(char_poly(curve, zs[m]));
    }
    std::vector<std::vector<cplx>> branch(n);
    for (int j = 0; j < n; ++j) branch[j].push_back(ks[0][j]);
    for (int m = 1; m < kLevels; ++m) {
        std::vector<bool> used(n, false);
        for (int j = 0; j < n; ++j) {
            cplx target = branch[j].back() * zs[m - 1];
            int best = -1;
            double d1 = 1e300, d2 = 1e300;
            for (int i = 0; i < n; ++i) {
                if (used[i]) continue;
                double d = std::abs(ks[m][i] * zs[m] - target);
                if (d < d1) {
                    d2 = d1;
                    d1 = d;
                    best = i;
                } else {
                    d2 = std::min(d2, d);
                }
            }
            if (n > 1 && d2 - d1 < 1e-6)
                throw TrackingError("leading_laurent: ambiguous root match");
            used[best] = true;
            branch[j].push_back(ks[m][best]);
        }
    }

    // per branch, g(z) = -k(z)*z = a + h*z + O(z^2) is analytic near 0;
    // Newton divided-difference interpolation through the geometric nodes
    // gives a = p(0) and h = p'(0) with truncation error ~ prod |z_m|,
    // which is far below 1e-4 (a plain low-order regression leaves an
    // O(z0^2) bias from the analytic tail)
    std::vector<LaurentPair> out(n);
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> dd(kLevels);
        for (int m = 0; m < kLevels; ++m) dd[m] = -branch[j][m] * zs[m];
        for (int order = 1; order < kLevels; ++order)
            for (int m = kLevels - 1; m >= order; --m)
                dd[m] = (dd[m] - dd[m - 1]) / (zs[m] - zs[m - order]);
        // Horner evaluation of the Newton form and its derivative at z = 0
        cplx p = dd[kLevels - 1], dp = 0.0;
        for (int m = kLevels - 2; m >= 0; --m) {
            dp = p + dp * (0.0 - zs[m]);
            p = dd[m] + p * (0.0 - zs[m]);
        }
        out[j] = {p, dp};
    }
    std::sort(out.begin(), out.end(), [&](const LaurentPair& p, const LaurentPair& q) {
        double dp = std::abs(p.a - cplx(1.0 - n));
        double dq = std::abs(q.a - cplx(1.0 - n));
        if (std::abs(dp - dq) > 1e-9) return dp < dq;
        if (std::abs(p.h.real() - q.h.real()) > 1e-12) return p.h.real() < q.h.real();
        return p.h.imag() < q.h.imag();
    });
    return out;
}

HFit fit_H(const CurveSpec& curve, unsigned seed) {
    if (!curve.det_backed()) throw DomainError("fit_H: needs a det-backed curve");
    int n = curve.N;
    if (n > 6) throw DomainError("fit_H: N <= 6");
    const EllipticData& d = curve.data;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sample_points = [&](int count) {
        std::vector<std::pair<cplx, cplx>> pts;  // (k, z)
        while (int(pts.size()) < count) {
            cplx z = (0.08 + 0.84 * u(rng)) + (0.08 + 0.84 * u(rng)) * d.tau;
            if (lattice_distance(z, d) < 0.08) continue;
            bool near_pair = false;
            for (int i = 0; i < n && !near_pair; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j &&
                        lattice_distance(z - (curve.state->x[i] - curve.state->x[j]),
                                         d) < 0.05)
                        near_pair = true;
            if (near_pair) continue;
            double r = 2.0 + std::abs(weierstrass(z, Kind::Zeta, d));
            cplx k = r * std::exp(2.0 * pi * I1 * u(rng));
            pts.emplace_back(k, z);
        }
        return pts;
    };

    // R_H(k,z) = base(k,z) + sum_i I_i * basis_i(k,z), affine-linear in I
    auto h_pieces = [&](cplx k, cplx z) {
        std::vector<cplx> sd = sigma_z_derivs(z, n, d);
        cplx zeta = weierstrass(z, Kind::Zeta, d);
        cplx phi = k + zeta;
        std::vector<cplx> piece(n + 1, cplx(0.0));
        for (int i = 0; i <= n; ++i) {
            double sign = 1.0;
            for (int m = 0; m <= i; ++m, sign = -sign)
                piece[i] +=
                    sign * sd[m] / sd[0] * binom(i, m) * std::pow(phi, double(i - m));
        }
        return piece;
    };

    int rows = 3 * n * n + n;
    auto pts = sample_points(rows);
    Eigen::MatrixXcd A(rows, n);
    Eigen::VectorXcd b(rows);
    for (int r = 0; r < rows; ++r) {
        auto [k, z] = pts[r];
        auto piece = h_pieces(k, z);
        for (int i = 0; i < n; ++i) A(r, i) = piece[i];
        b[r] = curve_eval(curve, k, z) - piece[n];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs().head(n);
    if (diag.minCoeff() <= 0.0 || diag.maxCoeff() / diag.minCoeff() > 1e10)
        throw SamplingError("fit_H: ill-conditioned sample system; reseed");
    HFit fit;
    fit.I = qr.solve(b);

    CurveSpec hcurve = curve_from_H(fit.I, d);
    for (auto& [k, z] : sample_points(2 * rows)) {
        cplx rd = curve_eval(curve, k, z);
        cplx rh = curve_eval(hcurve, k, z);
        fit.residual = std::max(fit.residual, std::abs(rd - rh) / (1.0 + std::abs(rd)));
    }
    return fit;
}

SheetTrack sheet_track(const CurveSpec& curve, const LiftedLoop& loop) {
    const EllipticData& d = curve.data;
    std::vector<cplx> base{loop.basepoint, loop.basepoint + double(loop.a),
                           loop.basepoint + double(loop.a) + double(loop.b) * d.tau};

    std::vector<cplx> start_roots = poly::roots(char_poly(curve, loop.basepoint));
    if (loop.sheet < 0 || loop.sheet >= int(start_roots.size()))
        throw DomainError("sheet_track: sheet index out of range");
    cplx k = start_roots[loop.sheet];

    auto advance = [&](cplx za, cplx zb, cplx kcur, auto&& self, int depth) -> cplx {
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
        // unambiguous only if the move is small next to the root gap
        if (r.size() > 1 && (d2 < 1e-6 || d1 > 0.4 * d2)) {
            if (depth > 24)
                throw BranchCrossingError("sheet_track: root gap collapse on path",
                                          0.0);
            cplx mid = 0.5 * (za + zb);
            cplx kmid = self(za, mid, kcur, self, depth + 1);
            return self(mid, zb, kmid, self, depth + 1);
        }
        return r[best];
    };

    double total = std::abs(base[1] - base[0]) + std::abs(base[2] - base[1]);
    for (int leg = 0; leg < 2; ++leg) {
        cplx za = base[leg], zb = base[leg + 1];
        double len = std::abs(zb - za);
        if (len < 1e-14) continue;
        int steps = std::max(2, int(std::lround(loop.steps * len / std::max(total, 1e-14))));
        for (int s = 0; s < steps; ++s) {
            cplx z1 = za + (zb - za) * (double(s) / steps);
            cplx z2 = za + (zb - za) * (double(s + 1) / steps);
            k = advance(z1, z2, k, advance, 0);
        }
    }

    SheetTrack out;
    out.k = k;
    int best = 0;
    double bd = 1e300;
    for (int i = 0; i < int(start_roots.size()); ++i) {
        double dist = std::abs(start_roots[i] - k);
        if (dist < bd) {
            bd = dist;
            best = i;
        }
    }
    out.sheet = best;
    return out;
}

namespace {

struct Derivs {
    cplx R, Rk, Rz, Rkk, Rkz, Rzz;
};

Derivs curve_derivs(const CurveSpec& curve, cplx k, cplx z) {
    double rho = std::min(0.02, 0.3 * lattice_distance(z, curve.data));
    auto at = [&](cplx w) { return char_poly(curve, w); };
    // z-derivatives of the coefficient vector via Cauchy circles
    poly::Coeffs c = at(z);
    poly::Coeffs ck = poly::derivative(c);
    poly::Coeffs ckk = poly::derivative(ck);
    auto dz = cauchy_derivs([&](cplx w) { return poly::eval(at(w), k); }, z, rho, 2);
    auto dzk = cauchy_derivs([&](cplx w) { return poly::eval(poly::derivative(at(w)), k); },
                             z, rho, 1);
    Derivs out;
    out.R = poly::eval(c, k);
    out.Rk = poly::eval(ck, k);
    out.Rz = dz[1];
    out.Rkk = poly::eval(ckk, k);
    out.Rkz = dzk[1];
    out.Rzz = dz[2];
    return out;
}

// winding number of D along the rectangle boundary; returns -1 when the
// phase sampling cannot be made unambiguous (zero on the boundary)
int winding_number(const std::function<cplx(cplx)>& D, cplx corner, cplx e1, cplx e2) {
    for (int per_side = 24; per_side <= 192; per_side *= 2) {
        std::vector<cplx> pts;
        for (int s = 0; s < per_side; ++s) pts.push_back(corner + e1 * (double(s) / per_side));
        for (int s = 0; s < per_side; ++s)
            pts.push_back(corner + e1 + e2 * (double(s) / per_side));
        for (int s = 0; s < per_side; ++s)
            pts.push_back(corner + e1 + e2 - e1 * (double(s) / per_side));
        for (int s = 0; s < per_side; ++s)
            pts.push_back(corner + e2 - e2 * (double(s) / per_side));
        pts.push_back(corner);
        double total = 0.0;
        bool ok = true;
        cplx prev = D(pts[0]);
        for (size_t i = 1; i < pts.size() && ok; ++i) {
            cplx cur = D(pts[i]);
            if (std::abs(cur) < 1e-300 || std::abs(prev) < 1e-300) return -1;
            double dphi = std::arg(cur / prev);
            if (std::abs(dphi) > 2.4) ok = false;
            total += dphi;
            prev = cur;
        }
        if (ok) return int(std::lround(total / (2.0 * pi)));
    }
    return -1;
}

}  // namespace

CensusReport singularity_census(const CurveSpec& curve) {
    CensusReport rep;
    rep.N = curve.N;
    if (curve.N <= 1) return rep;  // a degree-1 cover is smooth
    const EllipticData& d = curve.data;

    auto D = [&](cplx z) { return poly::discriminant(char_poly(curve, z)); };

    // adaptive rectangle subdivision of the fundamental domain, skipping a
    // margin around the lattice points where the r_i blow up
    struct Cell {
        double s0, s1, t0, t1;
    };
    // the start corner is shifted off rational points so that half-period
    // singular points never sit exactly on a cell boundary
    std::vector<Cell> work{{0.0137, 1.0137, 0.0171, 1.0171}};
    std::vector<cplx> candidates;
    auto zmap = [&](double s, double t) { return s + t * d.tau; };
    const double margin = 0.06;
    while (!work.empty()) {
        Cell c = work.back();
        work.pop_back();
        double ds = c.s1 - c.s0, dt = c.t1 - c.t0;
        cplx corner = zmap(c.s0, c.t0);
        cplx e1 = zmap(c.s1, c.t0) - corner, e2 = zmap(c.s0, c.t1) - corner;
        // skip cells inside the lattice-point guard
        bool all_near = true;
        for (double a : {0.0, 0.5, 1.0})
            for (double b : {0.0, 0.5, 1.0})
                if (lattice_distance(corner + a * e1 + b * e2, d) > margin)
                    all_near = false;
        if (all_near) continue;
        int w;
        if (lattice_distance(corner, d) < margin ||
            lattice_distance(corner + e1, d) < margin ||
            lattice_distance(corner + e2, d) < margin ||
            lattice_distance(corner + e1 + e2, d) < margin)
            w = -1;  // boundary unusable, subdivide until the guard is resolved
        else
            w = winding_number(D, corner, e1, e2);
        if (w == 0) continue;
        if (std::max(ds, dt) > 0.035 || w < 0) {
            if (std::max(ds, dt) < 0.004) continue;  // guard-hugging remnant
            double sm = 0.5 * (c.s0 + c.s1), tm = 0.5 * (c.t0 + c.t1);
            work.push_back({c.s0, sm, c.t0, tm});
            work.push_back({sm, c.s1, c.t0, tm});
            work.push_back({c.s0, sm, tm, c.t1});
            work.push_back({sm, c.s1, tm, c.t1});
            continue;
        }
        candidates.push_back(corner + 0.5 * (e1 + e2));
    }

    std::vector<SingularPoint> accepted_nodes, accepted_cusps, accepted_unclassified;
    auto already = [&](cplx z, cplx k) {
        auto near = [&](const std::vector<SingularPoint>& v) {
            for (const auto& p : v)
                if (std::abs(p.z - z) < 1e-5 && std::abs(p.k - k) < 1e-5) return true;
            return false;
        };
        return near(accepted_nodes) || near(accepted_cusps) ||
               near(accepted_unclassified);
    };

    for (cplx zc : candidates) {
        // double root of the k-polynomial as the k seed
        std::vector<cplx> rts = poly::roots(char_poly(curve, zc));
        cplx kc = rts[0];
        double bd = 1e300;
        poly::Coeffs ck = poly::derivative(char_poly(curve, zc));
        for (cplx r : rts) {
            double v = std::abs(poly::eval(ck, r));
            if (v < bd) {
                bd = v;
                kc = r;
            }
        }
        Derivs dv = curve_derivs(curve, kc, zc);
        // damped Gauss-Newton on (R, Rk, Rz); at an ordinary branch point it
        // stalls at a nonzero residual and the candidate is dropped below
        bool converged = false;
        for (int it = 0; it < 40; ++it) {
            dv = curve_derivs(curve, kc, zc);
            double res = std::max({std::abs(dv.R), std::abs(dv.Rk), std::abs(dv.Rz)});
            if (res < kEpsSingular * 1e-2) {
                converged = true;
                break;
            }
            Eigen::MatrixXcd J(3, 2);
            J << dv.Rk, dv.Rz, dv.Rkk, dv.Rkz, dv.Rkz, dv.Rzz;
            Eigen::Vector3cd r3(dv.R, dv.Rk, dv.Rz);
            Eigen::Vector2cd step = J.colPivHouseholderQr().solve(r3);
            if (!step.allFinite()) break;
            double cap = 0.02;
            if (step.norm() > cap) step *= cap / step.norm();
            kc -= step[0];
            zc -= step[1];
            if (lattice_distance(zc, d) < 0.02) break;
        }
        dv = curve_derivs(curve, kc, zc);
        double res = std::max({std::abs(dv.R), std::abs(dv.Rk), std::abs(dv.Rz)});
        if (res >= kEpsSingular) {
            if (converged || res < 1e-4) {
                if (!already(zc, kc))
                    accepted_unclassified.push_back(
                        {zc, kc, "newton residual " + std::to_string(res)});
            }
            continue;  // refined away: an ordinary branch point
        }
        if (already(zc, kc)) continue;

        Eigen::Matrix2cd H;
        H << dv.Rkk, dv.Rkz, dv.Rkz, dv.Rzz;
        Eigen::JacobiSVD<Eigen::Matrix2cd> svd(H, Eigen::ComputeFullV);
        double smax = svd.singularValues()[0], smin = svd.singularValues()[1];
        if (smin > 1e-6 * std::max(1.0, smax)) {
            accepted_nodes.push_back({zc, kc, ""});
            continue;
        }
        if (smax < 1e-8) {
            accepted_unclassified.push_back({zc, kc, "vanishing Hessian"});
            continue;
        }
        // rank 1: cusp iff the cubic term along the kernel direction survives
        Eigen::Vector2cd v = svd.matrixV().col(1);
        auto along = [&](cplx t) {
            return curve_eval(curve, kc + t * v[0], zc + t * v[1]);
        };
        cplx cubic = cauchy_derivs(along, 0.0, 1e-2, 3)[3];
        if (std::abs(cubic) > kCubicThreshold)
            accepted_cusps.push_back({zc, kc, ""});
        else
            accepted_unclassified.push_back({zc, kc, "degenerate beyond cubic"});
    }

    auto order = [](std::vector<SingularPoint>& v) {
        std::sort(v.begin(), v.end(), [](const SingularPoint& p, const SingularPoint& q) {
            if (std::abs(p.z.real() - q.z.real()) > 1e-12) return p.z.real() < q.z.real();
            if (std::abs(p.z.imag() - q.z.imag()) > 1e-12) return p.z.imag() < q.z.imag();
            if (std::abs(p.k.real() - q.k.real()) > 1e-12) return p.k.real() < q.k.real();
            return p.k.imag() < q.k.imag();
        });
    };
    rep.nodes = std::move(accepted_nodes);
    rep.cusps = std::move(accepted_cusps);
    rep.unclassified = std::move(accepted_unclassified);
    order(rep.nodes);
    order(rep.cusps);
    order(rep.unclassified);
    return rep;
}

CuspBoundVerdict verify_cusp_bound(const CensusReport& report) {
    CuspBoundVerdict v;
    v.N = report.N;
    v.cusps = int(report.cusps.size());
    v.nodes = int(report.nodes.size());
    v.margin = report.N - 2 * v.cusps - v.nodes;
    v.conclusive = report.unclassified.empty();
    v.pass = v.conclusive && v.margin > 0;
    return v;
}

std::string census_json(const CensusReport& report) {
    nlohmann::ordered_json j;
    j["N"] = report.N;
    auto dump = [](const std::vector<SingularPoint>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& p : v) {
            nlohmann::ordered_json e;
            e["z"] = {p.z.real(), p.z.imag()};
            e["k"] = {p.k.real(), p.k.imag()};
            if (!p.note.empty()) e["note"] = p.note;
            arr.push_back(e);
        }
        return arr;
    };
    j["nodes"] = dump(report.nodes);
    j["cusps"] = dump(report.cusps);
    j["unclassified"] = dump(report.unclassified);
    CuspBoundVerdict v = verify_cusp_bound(report);
    j["bound"] = {{"n", v.cusps},
                  {"k", v.nodes},
                  {"N", v.N},
                  {"margin", v.margin},
                  {"pass", v.pass}};
    return j.dump(2);
}

std::string curve_samples_csv(const CurveSpec& curve,
                              const std::vector<cplx>& z_samples) {
    std::ostringstream os;
    os.precision(17);
    os << "re_z,im_z,i,re_ri,im_ri\n";
    for (cplx z : z_samples) {
        poly::Coeffs c = char_poly(curve, z);
        int n = int(c.size()) - 1;
        for (int i = 1; i <= n; ++i) {
            cplx ri = c[n - i];  // coefficient of k^{N-i}
            os << z.real() << "," << z.imag() << "," << i << "," << ri.real() << ","
               << ri.imag() << "\n";
        }
    }
    return os.str();
}

}  // namespace cmc
