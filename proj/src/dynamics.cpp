#include "cmcurves/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace cmc {

namespace {

double min_pair_distance(const Eigen::VectorXcd& x, const EllipticData& d) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j)
            best = std::min(best, lattice_distance(x[i] - x[j], d));
    return best;
}

void check_collision(const Eigen::VectorXcd& x, const EllipticData& d, double delta_min,
                     double t = 0.0) {
    if (x.size() > 1 && min_pair_distance(x, d) < delta_min) {
        std::ostringstream os;
        os << "particle collision (pair distance < " << delta_min << ") at t=" << t;
        throw CollisionError(os.str(), t);
    }
}

Eigen::VectorXcd reduce_positions(Eigen::VectorXcd x, const EllipticData& d) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = reduce_mod_lattice(x[i], d).z0;
    return x;
}

// RHS with raw (unreduced) positions; wp is elliptic so reduction is optional.
EomRhs rhs_raw(const Eigen::VectorXcd& x, const Eigen::VectorXcd& q,
               const EllipticData& d, double qdot_factor = 4.0) {
    Eigen::Index n = x.size();
    EomRhs r;
    r.dx = q;
    r.dq = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) r.dq[i] += qdot_factor * weierstrass(x[i] - x[j], Kind::Pprime, d);
    return r;
}

Eigen::MatrixXcd lax_time_derivative(const PhasePoint& s, cplx z, double qdot_factor) {
    EomRhs r = rhs_raw(s.x, s.q, s.data, qdot_factor);
    Eigen::Index n = s.x.size();
    Eigen::MatrixXcd ldot(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ldot(i, i) = 0.5 * r.dq[i];
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j)
                ldot(i, j) = (r.dx[i] - r.dx[j]) * kr_kernel_dx(s.x[i] - s.x[j], z, s.data);
    }
    return ldot;
}

}  // namespace

PhasePoint make_phase_point(Eigen::VectorXcd x, Eigen::VectorXcd q,
                            const EllipticData& data, double delta_min) {
    if (x.size() < 1 || x.size() != q.size())
        throw DomainError("make_phase_point: need N >= 1 and matching x, q sizes");
    x = reduce_positions(std::move(x), data);
    check_collision(x, data, delta_min);
    return PhasePoint{std::move(x), std::move(q), data};
}

cplx hamiltonian(const PhasePoint& s) {
    check_collision(s.x, s.data, kCollisionThreshold);
    cplx h = 0.0;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) h += 0.5 * s.q[i] * s.q[i];
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
        for (Eigen::Index j = 0; j < s.x.size(); ++j)
            if (i != j) h -= 2.0 * weierstrass(s.x[i] - s.x[j], Kind::P, s.data);
    return h;
}

EomRhs eom_rhs(const PhasePoint& s) {
    check_collision(s.x, s.data, kCollisionThreshold);
    return rhs_raw(s.x, s.q, s.data);
}

Trajectory integrate(const PhasePoint& s0, double t_end, double dt, double drift_bound) {
    if (dt <= 0.0 || t_end <= 0.0)
        throw DomainError("integrate: dt and t_end must be positive");
    Trajectory traj;
    traj.dt = dt;
    cplx h0 = hamiltonian(s0);
    double h0mag = std::max(1e-12, std::abs(h0));

    Eigen::VectorXcd x = s0.x, q = s0.q;
    const EllipticData& d = s0.data;
    long nsteps = std::lround(t_end / dt);

    auto push = [&](double t) {
        traj.times.push_back(t);
        traj.states.push_back(PhasePoint{reduce_positions(x, d), q, d});
    };
    push(0.0);

    for (long step = 0; step < nsteps; ++step) {
        double t = step * dt;
        EomRhs k1 = rhs_raw(x, q, d);
        EomRhs k2 = rhs_raw(x + 0.5 * dt * k1.dx, q + 0.5 * dt * k1.dq, d);
        EomRhs k3 = rhs_raw(x + 0.5 * dt * k2.dx, q + 0.5 * dt * k2.dq, d);
        EomRhs k4 = rhs_raw(x + dt * k3.dx, q + dt * k3.dq, d);
        x += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        q += dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        x = reduce_positions(std::move(x), d);
        check_collision(x, d, kCollisionThreshold, t + dt);
        push(t + dt);
        double drift =
            std::abs(hamiltonian(traj.states.back()) - h0) / h0mag;
        traj.max_energy_drift = std::max(traj.max_energy_drift, drift);
        if (drift > drift_bound) {
            std::ostringstream os;
            os << "integrate: energy drift " << drift << " exceeds bound " << drift_bound
               << " at t=" << t + dt << " (step size too large)";
            throw StabilityError(os.str());
        }
    }
    return traj;
}

LaxMatrices lax_pair(const PhasePoint& s, cplx z) {
    Eigen::Index n = s.x.size();
    LaxMatrices lm;
    lm.L.resize(n, n);
    lm.M.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lm.L(i, i) = 0.5 * s.q[i];
        cplx diag = weierstrass(z, Kind::P, s.data);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            cplx xij = s.x[i] - s.x[j];
            lm.L(i, j) = kr_kernel(xij, z, s.data);
            lm.M(i, j) = -2.0 * kr_kernel_dx(xij, z, s.data);
            diag -= 2.0 * weierstrass(xij, Kind::P, s.data);
        }
        lm.M(i, i) = diag;
    }
    return lm;
}

double lax_residual(const PhasePoint& s, cplx z) {
    LaxMatrices lm = lax_pair(s, z);
    Eigen::MatrixXcd ldot = lax_time_derivative(s, z, 4.0);
    return (ldot - (lm.M * lm.L - lm.L * lm.M)).norm();
}

LaxCalibration calibrate_lax(const PhasePoint& s, cplx z) {
    LaxMatrices lm = lax_pair(s, z);
    LaxCalibration cal;
    cal.best.residual = std::numeric_limits<double>::infinity();
    for (double f : {2.0, -2.0, 4.0, -4.0}) {
        Eigen::MatrixXcd ldot = lax_time_derivative(s, z, f);
        for (int cs : {+1, -1}) {
            Eigen::MatrixXcd comm = (cs > 0) ? (lm.L * lm.M - lm.M * lm.L)
                                             : (lm.M * lm.L - lm.L * lm.M);
            LaxCalibration::Entry e{f, cs, (ldot - comm).norm()};
            cal.entries.push_back(e);
            if (e.residual < cal.best.residual) cal.best = e;
        }
    }
    return cal;
}

void record_lax_stats(Trajectory& traj, cplx z) {
    double worst = 0.0;
    for (const PhasePoint& s : traj.states)
        worst = std::max(worst, lax_residual(s, z));
    traj.max_lax_residual = worst;
}

BaSolution ba_solution(const Trajectory& traj, cplx z, int branch) {
    const PhasePoint& s0 = traj.states.front();
    const EllipticData& d = s0.data;
    Eigen::Index n = s0.x.size();
    if (branch < 0 || branch >= n) throw DomainError("ba_solution: branch out of range");

    BaSolution ba;
    ba.data_ = d;
    ba.z_ = z;

    auto eig_sorted = [&](const Eigen::MatrixXcd& L) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(L);
        return es;
    };

    LaxMatrices lm0 = lax_pair(s0, z);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es0 = eig_sorted(lm0.L);
    // deterministic branch order: sort eigenvalues lexicographically
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        cplx ea = es0.eigenvalues()[a], eb = es0.eigenvalues()[b];
        return ea.real() != eb.real() ? ea.real() < eb.real() : ea.imag() < eb.imag();
    });
    int idx = order[branch];
    cplx mu = es0.eigenvalues()[idx];
    for (int i = 0; i < n; ++i) {
        if (i == idx) continue;
        if (std::abs(es0.eigenvalues()[i] - mu) < 1e-6)
            throw BranchCrossingError("ba_solution: eigenvalue gap below 1e-6 at t=0", 0.0);
    }
    ba.k_ = -mu;

    Eigen::VectorXcd C = es0.eigenvectors().col(idx);
    // normalization: first component with magnitude > tol scaled to 1
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(C[i]) > 1e-12) {
            C /= C[i];
            break;
        }

    Eigen::VectorXcd x = s0.x, q = s0.q;
    double dt = traj.dt;
    size_t nsamp = traj.times.size();
    ba.times_ = traj.times;
    ba.xs_.reserve(nsamp);
    ba.C_.reserve(nsamp);
    ba.xs_.push_back(x);
    ba.C_.push_back(C);

    auto Mmat = [&](const Eigen::VectorXcd& xx, const Eigen::VectorXcd& qq) {
        return lax_pair(PhasePoint{xx, qq, d}, z).M;
    };

    for (size_t step = 0; step + 1 < nsamp; ++step) {
        double t = traj.times[step];
        EomRhs k1 = rhs_raw(x, q, d);
        Eigen::VectorXcd c1 = Mmat(x, q) * C;
        Eigen::VectorXcd x2 = x + 0.5 * dt * k1.dx, q2 = q + 0.5 * dt * k1.dq;
        EomRhs k2 = rhs_raw(x2, q2, d);
        Eigen::VectorXcd c2 = Mmat(x2, q2) * (C + 0.5 * dt * c1);
        Eigen::VectorXcd x3 = x + 0.5 * dt * k2.dx, q3 = q + 0.5 * dt * k2.dq;
        EomRhs k3 = rhs_raw(x3, q3, d);
        Eigen::VectorXcd c3 = Mmat(x3, q3) * (C + 0.5 * dt * c2);
        Eigen::VectorXcd x4 = x + dt * k3.dx, q4 = q + dt * k3.dq;
        EomRhs k4 = rhs_raw(x4, q4, d);
        Eigen::VectorXcd c4 = Mmat(x4, q4) * (C + dt * c3);
        x += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        q += dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        C += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);

        // re-project onto the eigendirection of L(t) nearest to -k
        Eigen::MatrixXcd L = lax_pair(PhasePoint{x, q, d}, z).L;
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(L);
        int best = 0;
        double bestd = std::numeric_limits<double>::infinity(), second = bestd;
        for (int i = 0; i < n; ++i) {
            double dist = std::abs(es.eigenvalues()[i] + ba.k_);
            if (dist < bestd) {
                second = bestd;
                bestd = dist;
                best = i;
            } else {
                second = std::min(second, dist);
            }
        }
        if (n > 1 && second < 1e-6)
            throw BranchCrossingError("ba_solution: eigenvalue collision along trajectory",
                                      t + dt);
        Eigen::VectorXcd v = es.eigenvectors().col(best);
        C = v * (v.adjoint() * C)(0) / (v.adjoint() * v)(0);
        ba.eig_residual_max_ =
            std::max(ba.eig_residual_max_,
                     ((L + ba.k_ * Eigen::MatrixXcd::Identity(n, n)) * C).norm() /
                         std::max(1e-12, C.norm()));
        ba.xs_.push_back(x);
        ba.C_.push_back(C);
    }
    return ba;
}

Eigen::VectorXcd BaSolution::interp(const std::vector<Eigen::VectorXcd>& f, double t) const {
    double dt = times_.size() > 1 ? times_[1] - times_[0] : 1.0;
    long i = std::lround(std::floor((t - times_.front()) / dt));
    long last = long(times_.size()) - 1;
    // 6-point Lagrange: the state carries pole-scale derivatives, so cubic
    // interpolation leaves an error floor visible in finite-difference checks
    constexpr long kStencil = 6;
    i = std::clamp(i - kStencil / 2 + 1, 0L, std::max(0L, last - (kStencil - 1)));
    if (last < kStencil - 1) return f[std::clamp(i, 0L, last)];
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(f[0].size());
    for (long j = 0; j < kStencil; ++j) {
        double lj = 1.0;
        for (long m = 0; m < kStencil; ++m)
            if (m != j) lj *= (t - times_[i + m]) / (times_[i + j] - times_[i + m]);
        out += lj * f[i + j];
    }
    return out;
}

cplx BaSolution::psi(cplx x, double t) const {
    Eigen::VectorXcd xs = interp(xs_, t);
    Eigen::VectorXcd C = interp(C_, t);
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        s += C[i] * kr_kernel(x - xs[i], z_, data_);
    return s * std::exp(k_ * x + k_ * k_ * t);
}

cplx BaSolution::potential(cplx x, double t) const {
    Eigen::VectorXcd xs = interp(xs_, t);
    cplx u = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        u += 2.0 * weierstrass(x - xs[i], Kind::P, data_);
    return u;
}

double BaSolution::pole_distance(cplx x, double t) const {
    Eigen::VectorXcd xs = interp(xs_, t);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        best = std::min(best, lattice_distance(x - xs[i], data_));
    return best;
}

double ba_pde_residual(const BaSolution& ba, const GridSpec& g) {
    if (g.nx < 3 || g.nt < 3) throw DomainError("ba_pde_residual: grid too small");
    double worst = 0.0, psimax = 0.0;
    for (int it = 1; it + 1 < g.nt; ++it) {
        double t = g.t0 + it * g.dt;
        for (int ix = 1; ix + 1 < g.nx; ++ix) {
            cplx x = g.x0 + double(ix) * g.dx;
            if (ba.pole_distance(x, t) < 1e-2)
                throw GridError("ba_pde_residual: grid point within 1e-2 of a pole");
            cplx p0 = ba.psi(x, t);
            cplx dt_psi = (ba.psi(x, t + g.dt) - ba.psi(x, t - g.dt)) / (2.0 * g.dt);
            cplx dxx_psi =
                (ba.psi(x + g.dx, t) - 2.0 * p0 + ba.psi(x - g.dx, t)) / (g.dx * g.dx);
            cplx res = dt_psi - dxx_psi + ba.potential(x, t) * p0;
            worst = std::max(worst, std::abs(res));
            psimax = std::max(psimax, std::abs(p0));
        }
    }
    return worst / std::max(1e-300, psimax);
}

std::string trajectory_csv(const Trajectory& traj, cplx z) {
    std::ostringstream os;
    os.precision(17);
    int n = traj.states.front().n();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ", re_x" << i << ", im_x" << i;
    for (int i = 1; i <= n; ++i) os << ", re_q" << i << ", im_q" << i;
    os << ", energy_drift, lax_residual\n";
    cplx h0 = hamiltonian(traj.states.front());
    double h0mag = std::max(1e-12, std::abs(h0));
    for (size_t s = 0; s < traj.times.size(); ++s) {
        const PhasePoint& st = traj.states[s];
        os << traj.times[s];
        for (int i = 0; i < n; ++i) os << ", " << st.x[i].real() << ", " << st.x[i].imag();
        for (int i = 0; i < n; ++i) os << ", " << st.q[i].real() << ", " << st.q[i].imag();
        os << ", " << std::abs(hamiltonian(st) - h0) / h0mag << ", " << lax_residual(st, z)
           << "\n";
    }
    return os.str();
}

std::string trajectory_json(const Trajectory& traj, cplx z) {
    nlohmann::ordered_json j;
    int n = traj.states.front().n();
    cplx h0 = hamiltonian(traj.states.front());
    double h0mag = std::max(1e-12, std::abs(h0));
    j["dt"] = traj.dt;
    j["samples"] = nlohmann::ordered_json::array();
    for (size_t s = 0; s < traj.times.size(); ++s) {
        const PhasePoint& st = traj.states[s];
        nlohmann::ordered_json row;
        row["t"] = traj.times[s];
        for (int i = 0; i < n; ++i) {
            row["re_x" + std::to_string(i + 1)] = st.x[i].real();
            row["im_x" + std::to_string(i + 1)] = st.x[i].imag();
        }
        for (int i = 0; i < n; ++i) {
            row["re_q" + std::to_string(i + 1)] = st.q[i].real();
            row["im_q" + std::to_string(i + 1)] = st.q[i].imag();
        }
        row["energy_drift"] = std::abs(hamiltonian(st) - h0) / h0mag;
        row["lax_residual"] = lax_residual(st, z);
        j["samples"].push_back(row);
    }
    return j.dump(2);
}

}  // namespace cmc
