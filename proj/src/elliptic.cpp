#include "cmcurves/elliptic.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace cmc {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

// theta1 and v-derivatives:
//   theta1(v) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1)v)
cplx theta1(cplx v, const EllipticData& d, int nd = 0) {
    cplx s = 0.0;
    for (int n = 0; n < d.trunc; ++n) {
        cplx c = 2.0 * (n % 2 ? -1.0 : 1.0) * std::pow(d.q, (n + 0.5) * (n + 0.5));
        double m = 2.0 * n + 1.0;
        cplx f;
        switch (nd % 4) {
            case 0: f = std::sin(m * v); break;
            case 1: f = std::cos(m * v); break;
            case 2: f = -std::sin(m * v); break;
            default: f = -std::cos(m * v); break;
        }
        cplx term = c * std::pow(m, nd) * f;
        s += term;
        // terms decay like |q|^{n^2}; stop once negligible
        if (n > 2 && std::abs(c) * std::pow(m, nd) < 1e-18 * (1.0 + std::abs(s)))
            break;
    }
    return s;
}

cplx theta1_deriv0(const EllipticData& d, int nd) {
    // odd function: even derivatives vanish at 0
    cplx s = 0.0;
    for (int n = 0; n < d.trunc; ++n) {
        cplx c = 2.0 * (n % 2 ? -1.0 : 1.0) * std::pow(d.q, (n + 0.5) * (n + 0.5));
        double m = 2.0 * n + 1.0;
        double sgn = (nd % 4 == 1) ? 1.0 : -1.0;  // cos(0) with derivative sign
        s += c * std::pow(m, nd) * sgn;
    }
    return s;
}

void check_pole(cplx z, const EllipticData& d, const char* fname) {
    Reduced r = reduce_mod_lattice(z, d);
    if (std::abs(r.z0) < d.pole_eps) {
        std::ostringstream os;
        os << fname << ": argument within " << d.pole_eps << " of lattice point";
        throw PoleError(os.str(), cplx(double(r.m)) + double(r.n) * d.tau);
    }
}

struct GlRule {
    std::vector<double> x, w;  // nodes/weights on [-1,1]
};

const GlRule& gl_rule(int n) {
    static std::map<int, GlRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GlRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n / 2 + n % 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

cplx gl_integrate(const std::function<cplx(cplx)>& f, cplx a, cplx b, int n) {
    const GlRule& r = gl_rule(n);
    cplx mid = 0.5 * (a + b), half = 0.5 * (b - a);
    cplx s = 0.0;
    for (int i = 0; i < n; ++i) s += r.w[i] * f(mid + half * r.x[i]);
    return s * half;
}

}  // namespace

EllipticData lattice_invariants(cplx tau, int trunc, double tol) {
    if (!(tau.imag() > 0.0))
        throw DomainError("lattice_invariants: Im tau must be positive");
    EllipticData d;
    d.tau = tau;
    d.trunc = trunc;
    d.tol = tol;
    d.q = std::exp(kI * kPi * tau);
    if (std::abs(std::pow(d.q, (trunc - 0.5) * (trunc - 0.5))) > tol)
        throw AccuracyError("lattice_invariants: theta series for eta1 does not reach tol at this truncation");
    d.theta1_prime0 = theta1_deriv0(d, 1);
    d.eta1 = -kPi * kPi / 6.0 * theta1_deriv0(d, 3) / d.theta1_prime0;
    d.eta2 = d.eta1 * tau - kI * kPi;  // Legendre relation, fixed convention

    // Eisenstein series in qt = q^2:  g2 = (4/3) pi^4 E4, g3 = (8/27) pi^6 E6
    cplx qt = d.q * d.q;
    cplx e4 = 1.0, e6 = 1.0, qn = 1.0;
    for (int n = 1; n < 4 * trunc; ++n) {
        qn *= qt;
        double n3 = double(n) * n * n;
        cplx t = qn / (1.0 - qn);
        e4 += 240.0 * n3 * t;
        e6 -= 504.0 * n3 * double(n) * n * t;
        if (std::abs(qn) < 1e-20) break;
    }
    d.g2 = 4.0 * std::pow(kPi, 4) / 3.0 * e4;
    d.g3 = 8.0 * std::pow(kPi, 6) / 27.0 * e6;
    return d;
}

Reduced reduce_mod_lattice(cplx z, const EllipticData& d) {
    long n = std::lround(z.imag() / d.tau.imag());
    cplx z2 = z - double(n) * d.tau;
    long m = std::lround(z2.real());
    return Reduced{z2 - double(m), m, n};
}

double lattice_distance(cplx z, const EllipticData& d) {
    Reduced r = reduce_mod_lattice(z, d);
    double best = std::abs(r.z0);
    for (int dm = -1; dm <= 1; ++dm)
        for (int dn = -1; dn <= 1; ++dn)
            best = std::min(best, std::abs(r.z0 - double(dm) - double(dn) * d.tau));
    return best;
}

cplx weierstrass(cplx z, Kind kind, const EllipticData& d) {
    if (kind != Kind::Sigma) check_pole(z, d, "weierstrass");
    Reduced r = reduce_mod_lattice(z, d);
    cplx z0 = r.z0;
    cplx v = kPi * z0;
    switch (kind) {
        case Kind::Sigma: {
            cplx s0 = std::exp(d.eta1 * z0 * z0) * theta1(v, d) / (kPi * d.theta1_prime0);
            double sign = ((r.m + r.n + r.m * r.n) % 2) ? -1.0 : 1.0;
            cplx lam = double(r.m) + double(r.n) * d.tau;
            cplx fac = sign * std::exp((2.0 * double(r.m) * d.eta1 + 2.0 * double(r.n) * d.eta2) *
                                       (z0 + 0.5 * lam));
            return s0 * fac;
        }
        case Kind::Zeta: {
            cplx t = theta1(v, d), tp = theta1(v, d, 1);
            return 2.0 * d.eta1 * z0 + kPi * tp / t +
                   2.0 * double(r.m) * d.eta1 + 2.0 * double(r.n) * d.eta2;
        }
        case Kind::P: {
            cplx t = theta1(v, d), tp = theta1(v, d, 1), tpp = theta1(v, d, 2);
            return -2.0 * d.eta1 - kPi * kPi * (tpp * t - tp * tp) / (t * t);
        }
        case Kind::Pprime: {
            cplx t = theta1(v, d), tp = theta1(v, d, 1), tpp = theta1(v, d, 2),
                 t3 = theta1(v, d, 3);
            // -(pi^3) d^3/dv^3 log theta1
            return -std::pow(kPi, 3) *
                   (t3 * t * t - 3.0 * t * tp * tpp + 2.0 * tp * tp * tp) / (t * t * t);
        }
    }
    return 0.0;  // unreachable
}

cplx kr_kernel(cplx x, cplx z, const EllipticData& d) {
    check_pole(x, d, "kr_kernel(x)");
    check_pole(z, d, "kr_kernel(z)");
    return weierstrass(z - x, Kind::Sigma, d) /
           (weierstrass(z, Kind::Sigma, d) * weierstrass(x, Kind::Sigma, d)) *
           std::exp(weierstrass(z, Kind::Zeta, d) * x);
}

cplx kr_kernel_dx(cplx x, cplx z, const EllipticData& d) {
    check_pole(x, d, "kr_kernel_dx(x)");
    check_pole(z, d, "kr_kernel_dx(z)");
    cplx zz = weierstrass(z, Kind::Zeta, d);
    cplx zx = weierstrass(x, Kind::Zeta, d);
    cplx zmx = weierstrass(z - x, Kind::Zeta, d);
    return kr_kernel(x, z, d) * (zz - zx - zmx);
}

std::vector<cplx> sigma_z_derivs(cplx z, int n_max, const EllipticData& d) {
    if (n_max > 12)
        throw DomainError("sigma_z_derivs: n_max > 12 unsupported");
    const int M = 96;
    double radius = 0.25 * std::min(1.0, d.tau.imag());
    std::vector<cplx> vals(M);
    for (int m = 0; m < M; ++m) {
        cplx w = z + radius * std::exp(kI * (2.0 * kPi * m / M));
        vals[m] = weierstrass(w, Kind::Sigma, d);
    }
    std::vector<cplx> out(n_max + 1);
    double fact = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) fact *= n;
        cplx s = 0.0;
        for (int m = 0; m < M; ++m)
            s += vals[m] * std::exp(-kI * (2.0 * kPi * m * n / M));
        out[n] = s / double(M) * fact / std::pow(radius, n);
    }
    return out;
}

cplx segment_integral(const std::function<cplx(cplx)>& f, const Segment& seg, double tol) {
    if (seg.start == seg.end)
        throw DomainError("segment_integral: degenerate segment");
    int n = std::max(4, seg.nodes);
    cplx prev = gl_integrate(f, seg.start, seg.end, n);
    while (n < 256) {
        n *= 2;
        cplx cur = gl_integrate(f, seg.start, seg.end, n);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    cplx last = gl_integrate(f, seg.start, seg.end, 256);
    if (std::abs(last - prev) <= tol) return last;
    std::ostringstream os;
    os << "segment_integral: no convergence, last estimates " << prev << " and " << last;
    throw AccuracyError(os.str());
}

std::pair<cplx, cplx> c_constants(const EllipticData& d) {
    return {-2.0 * d.eta1, -2.0 * d.eta2 / d.tau};
}

}  // namespace cmc
