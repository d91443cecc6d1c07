#pragma once

#include "dyngame/game_model.hpp"

namespace dyngame {

struct EquilibriumSolution {
    Vec p_star;
    Vec m_star;
    double residual = 0.0;
    int iterations = 0;
};

// Raised when the fixed-point solver exhausts its iteration budget.
class NonConvergence : public DomainError {
public:
    NonConvergence(const std::string& what, double last_residual)
        : DomainError(what), residual(last_residual) {}
    double residual;
};

// Solves P = Psi(alpha*, P) by damped fixed-point iteration with a Newton fallback.
EquilibriumSolution solve_equilibrium(const GameSpec& spec, const Vec& p_init, double tol = 1e-12,
                                      int max_iter = 10000);
EquilibriumSolution solve_equilibrium(const GameSpec& spec);

// Transition matrix F(x, x') of the observed state induced by CCPs p.
Eigen::Matrix4d state_transition(const Vec& p);

// Stationary law of the chain induced by p.
Vec stationary_distribution(const Vec& p, const GameSpec& spec);

}  // namespace dyngame
