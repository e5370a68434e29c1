#include "cmcurves/polyroots.hpp"

#include <algorithm>
#include <cmath>

namespace cmc::poly {

cplx eval(const Coeffs& p, cplx x) {
    cplx s = 0.0;
    for (Eigen::Index i = p.size() - 1; i >= 0; --i) s = s * x + p[i];
    return s;
}

Coeffs derivative(const Coeffs& p) {
    if (p.size() <= 1) return Coeffs::Zero(1);
    Coeffs d(p.size() - 1);
    for (Eigen::Index i = 1; i < p.size(); ++i) d[i - 1] = double(i) * p[i];
    return d;
}

std::vector<cplx> roots(const Coeffs& p_in) {
    Coeffs p = p_in;
    // strip trailing zero coefficients
    Eigen::Index n = p.size() - 1;
    while (n > 0 && std::abs(p[n]) == 0.0) --n;
    if (n < 1) return {};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, /*computeEigenvectors=*/false);
    std::vector<cplx> r(n);
    Coeffs dp = derivative(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx x = es.eigenvalues()[i];
        for (int it = 0; it < 3; ++it) {
            cplx d = eval(dp, x);
            if (std::abs(d) < 1e-300) break;
            cplx step = eval(p, x) / d;
            if (!std::isfinite(std::abs(step)) || std::abs(step) > 1.0) break;
            x -= step;
        }
        r[i] = x;
    }
    std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return r;
}

cplx resultant(const Coeffs& p, const Coeffs& q) {
    Eigen::Index n = p.size() - 1, m = q.size() - 1;
    if (n < 0 || m < 0) throw DomainError("resultant: empty polynomial");
    if (n == 0 && m == 0) return 1.0;
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n + m, n + m);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c <= n; ++c) s(r, r + c) = p[n - c];
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c <= m; ++c) s(m + r, r + c) = q[m - c];
    return s.fullPivLu().determinant();
}

cplx discriminant(const Coeffs& p) {
    Eigen::Index n = p.size() - 1;
    if (n < 1) throw DomainError("discriminant: degree < 1");
    return resultant(p, derivative(p)) / p[n];
}

double min_pairwise_gap(const std::vector<cplx>& r) {
    double g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < r.size(); ++i)
        for (size_t j = i + 1; j < r.size(); ++j)
            g = std::min(g, std::abs(r[i] - r[j]));
    return g;
}

}  // namespace cmc::poly
