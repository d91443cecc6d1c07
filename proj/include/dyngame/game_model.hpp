#pragma once

#include <array>
#include <string>

#include "dyngame/common.hpp"

namespace dyngame {

inline constexpr double kEulerGamma = 0.57721566490153286;

struct GameSpec {
    double lambda_rn = 0.0;
    double lambda_ec = 0.0;
    double lambda_rs = 0.0;
    std::array<double, 2> lambda_fc{0.0, 0.0};
    double beta = 0.95;
    double euler_gamma = kEulerGamma;

    Alpha alpha() const { return Alpha(lambda_rn, lambda_ec); }
    // Copy of the spec with the estimated pair replaced.
    GameSpec with_alpha(const Alpha& a) const;
    // Throws DomainError if beta is outside (0,1) or any parameter is non-finite.
    // allow_zero_beta admits beta = 0 for static special cases.
    void validate(bool allow_zero_beta = false) const;
};

// The three Monte Carlo designs (1-based index).
GameSpec design(int index);

// State reached after joint action (a1, a2): 1 + 2*a1 + a2.
int next_state(int a1, int a2);

// Previous action of player j encoded in state x.
int incumbency(int j, int x);

// Deterministic flow profit of player j choosing a_j while the rival chooses a_opp.
double flow_profit(int j, int a_j, int a_opp, int x, const GameSpec& spec);

// Ex-ante value functions V_j(x) at beliefs p, as a 2x4 matrix (row j-1).
Eigen::Matrix<double, 2, 4> ex_ante_values(const Vec& p, const Alpha& alpha, const GameSpec& spec);

// Best-response CCP mapping Psi(alpha, p).
Vec best_response(const Alpha& alpha, const Vec& p, const GameSpec& spec);

// Throws DomainError unless p has length 8 with every entry in (0,1).
void require_interior(const Vec& p, const char* who);

}  // namespace dyngame
