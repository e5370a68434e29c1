#pragma once

// The N-particle flow on the torus: Hamiltonian, equations of motion,
// fixed-step order-4 integration, the Lax matrices L(z), M(z), and the
// eigenfunction check for the associated linear PDE.
//
// Convention note: with positions reduced to representatives and the
// equations of motion xdot_i = q_i, qdot_i = 4*sum_{j!=i} wp'(x_i-x_j),
// the matrix identity that holds is  dL/dt = [M, L].  The commutator
// order is pinned down by the calibration scan in calibrate_lax().

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cmcurves/elliptic.hpp"

namespace cmc {

constexpr double kCollisionThreshold = 1e-4;

struct PhasePoint {
    Eigen::VectorXcd x;  // positions, stored reduced mod Z + tau*Z
    Eigen::VectorXcd q;  // momenta
    EllipticData data;

    int n() const { return int(x.size()); }
};

// Validates, reduces positions, checks pairwise collisions.
PhasePoint make_phase_point(Eigen::VectorXcd x, Eigen::VectorXcd q,
                            const EllipticData& data,
                            double delta_min = kCollisionThreshold);

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    double dt = 0.0;
    double max_energy_drift = 0.0;   // relative to |H(0)|
    double max_lax_residual = -1.0;  // filled by record_lax_stats
};

cplx hamiltonian(const PhasePoint& s);

struct EomRhs {
    Eigen::VectorXcd dx, dq;
};
EomRhs eom_rhs(const PhasePoint& s);

Trajectory integrate(const PhasePoint& s0, double t_end, double dt,
                     double drift_bound = 1e-2);

struct LaxMatrices {
    Eigen::MatrixXcd L, M;
};
LaxMatrices lax_pair(const PhasePoint& s, cplx z);

// Frobenius norm of dL/dt - [M, L].
double lax_residual(const PhasePoint& s, cplx z);

// Scan of the EOM factor {+-2, +-4} for qdot and both commutator orders;
// returns residuals indexed [factor][order] and the winning combination.
struct LaxCalibration {
    struct Entry {
        double factor;
        int comm_sign;  // +1: dL/dt-[L,M], -1: dL/dt-[M,L]
        double residual;
    };
    std::vector<Entry> entries;
    Entry best;
};
LaxCalibration calibrate_lax(const PhasePoint& s, cplx z);

void record_lax_stats(Trajectory& traj, cplx z);

// Double-Bloch eigenfunction built along a trajectory:
//   psi(x,t) = sum_i c_i(t) F(x - x_i(t), z) exp(k x + k^2 t)
// with (L + k) C = 0 and dC/dt = M C, re-projected onto the eigendirection
// each step. Positions are kept unreduced so psi is continuous in t.
class BaSolution {
public:
    cplx psi(cplx x, double t) const;
    cplx potential(cplx x, double t) const;  // 2 sum_i wp(x - x_i(t))
    cplx k() const { return k_; }
    cplx z() const { return z_; }
    double eig_residual_max() const { return eig_residual_max_; }
    double pole_distance(cplx x, double t) const;

    friend BaSolution ba_solution(const Trajectory& traj, cplx z, int branch);

private:
    std::vector<double> times_;
    std::vector<Eigen::VectorXcd> xs_;  // unreduced positions per sample
    std::vector<Eigen::VectorXcd> C_;
    cplx k_, z_;
    EllipticData data_;
    double eig_residual_max_ = 0.0;

    Eigen::VectorXcd interp(const std::vector<Eigen::VectorXcd>& f, double t) const;
};

BaSolution ba_solution(const Trajectory& traj, cplx z, int branch);

struct GridSpec {
    cplx x0;
    double dx = 0.0;
    int nx = 0;
    double t0 = 0.0, dt = 0.0;
    int nt = 0;
};

// max |(d_t - d_x^2 + u) psi| / max |psi| over the interior grid points,
// via central differences.
double ba_pde_residual(const BaSolution& psi, const GridSpec& grid);

// CSV/JSON trajectory export; columns
// t, re_x1, im_x1, ..., re_qN, im_qN, energy_drift, lax_residual
std::string trajectory_csv(const Trajectory& traj, cplx z);
std::string trajectory_json(const Trajectory& traj, cplx z);

}  // namespace cmc
