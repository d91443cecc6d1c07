#include "dyngame/equilibrium.hpp"

#include <cmath>

namespace dyngame {

namespace {

double sup_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

// Keeps a Newton iterate strictly inside the unit cube.
Vec clamp_interior(const Vec& p) {
    return p.cwiseMax(1e-10).cwiseMin(1.0 - 1e-10);
}

Mat psi_p_jacobian(const Alpha& alpha, const Vec& p, const GameSpec& spec) {
    Mat jac(kDimP, kDimP);
    const double h = 1e-6;
    for (int i = 0; i < kDimP; ++i) {
        Vec up = p, dn = p;
        up[i] += h;
        dn[i] -= h;
        jac.col(i) = (best_response(alpha, up, spec) - best_response(alpha, dn, spec)) / (2.0 * h);
    }
    return jac;
}

}  // namespace

EquilibriumSolution solve_equilibrium(const GameSpec& spec, const Vec& p_init, double tol, int max_iter) {
    spec.validate(true);
    if (!(tol > 0.0)) throw DomainError("solve_equilibrium: tol must be positive");
    require_interior(p_init, "solve_equilibrium");
    const Alpha alpha = spec.alpha();

    Vec p = p_init;
    double rho = 1.0;
    double best = INFINITY;
    int since_best = 0;
    int rises = 0;
    double prev = INFINITY;
    bool newton = false;

    for (int it = 0; it < max_iter; ++it) {
        const Vec psi = best_response(alpha, p, spec);
        const double res = sup_norm(psi - p);
        if (res <= tol) {
            EquilibriumSolution sol;
            sol.p_star = p;
            sol.m_star = stationary_distribution(p, spec);
            sol.residual = res;
            sol.iterations = it;
            return sol;
        }
        if (res < best * (1.0 - 1e-3)) {
            best = res;
            since_best = 0;
        } else {
            ++since_best;
        }
        rises = res > prev ? rises + 1 : 0;
        prev = res;
        // Oscillation halves the step; lack of progress switches to Newton.
        if (rho == 1.0 && rises >= 3) rho = 0.5;
        if (since_best >= 50) newton = true;

        if (newton) {
            const Mat jac = Mat::Identity(kDimP, kDimP) - psi_p_jacobian(alpha, p, spec);
            Vec step = jac.fullPivLu().solve(psi - p);
            double t = 1.0;
            Vec trial = clamp_interior(p + step);
            while (t > 1e-4 && sup_norm(best_response(alpha, trial, spec) - trial) > res) {
                t *= 0.5;
                trial = clamp_interior(p + t * step);
            }
            p = trial;
        } else {
            p = (1.0 - rho) * p + rho * psi;
        }
    }
    const double last = sup_norm(best_response(alpha, p, spec) - p);
    throw NonConvergence("solve_equilibrium: no convergence within max_iter (residual " +
                             std::to_string(last) + ")",
                         last);
}

EquilibriumSolution solve_equilibrium(const GameSpec& spec) {
    return solve_equilibrium(spec, Vec::Constant(kDimP, 0.5));
}

Eigen::Matrix4d state_transition(const Vec& p) {
    require_interior(p, "state_transition");
    Eigen::Matrix4d f = Eigen::Matrix4d::Zero();
    for (int x = 1; x <= kStates; ++x) {
        const double p1 = p[ccp_index(1, x)];
        const double p2 = p[ccp_index(2, x)];
        for (int a1 = 0; a1 <= 1; ++a1) {
            for (int a2 = 0; a2 <= 1; ++a2) {
                f(x - 1, next_state(a1, a2) - 1) += (a1 ? p1 : 1.0 - p1) * (a2 ? p2 : 1.0 - p2);
            }
        }
    }
    return f;
}

Vec stationary_distribution(const Vec& p, const GameSpec& spec) {
    (void)spec;  // transitions depend only on the CCPs in this game
    const Eigen::Matrix4d f = state_transition(p);
    // Solve m (I - F) = 0 with the normalization sum(m) = 1 replacing one equation.
    Eigen::Matrix4d a = (Eigen::Matrix4d::Identity() - f).transpose();
    a.row(kStates - 1).setOnes();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    b[kStates - 1] = 1.0;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
    if (!lu.isInvertible()) throw DomainError("stationary_distribution: reducible chain");
    Vec m = lu.solve(b);
    if (m.minCoeff() < 0.0) throw DomainError("stationary_distribution: negative mass");
    return m;
}

}  // namespace dyngame
