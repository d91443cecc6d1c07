#include "dyngame/game_model.hpp"

#include <cmath>
#include <sstream>

namespace dyngame {

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Probability that player j takes action a in state x under beliefs p.
inline double choice_prob(const Vec& p, int j, int a, int x) {
    const double p1 = p[ccp_index(j, x)];
    return a == 1 ? p1 : 1.0 - p1;
}

// Maps (own action, rival action) of player j to the joint (a1, a2) successor.
inline int successor(int j, int a_j, int a_opp) {
    return j == 1 ? next_state(a_j, a_opp) : next_state(a_opp, a_j);
}

double flow_profit_alpha(int j, int a_j, int a_opp, int x, const Alpha& alpha, const GameSpec& spec) {
    if (a_j == 0) return 0.0;
    return spec.lambda_rs - alpha[0] * std::log(1.0 + a_opp) - spec.lambda_fc[j - 1] -
           alpha[1] * (1.0 - incumbency(j, x));
}

Vec4 solve_values(int j, const Vec& p, const Alpha& alpha, const GameSpec& spec) {
    const int opp = 3 - j;
    Mat4 system = Mat4::Identity();
    Vec4 rhs = Vec4::Zero();
    for (int x = 1; x <= kStates; ++x) {
        for (int a_j = 0; a_j <= 1; ++a_j) {
            const double pj = choice_prob(p, j, a_j, x);
            rhs[x - 1] += pj * (spec.euler_gamma - std::log(pj));
            for (int a_o = 0; a_o <= 1; ++a_o) {
                const double w = pj * choice_prob(p, opp, a_o, x);
                rhs[x - 1] += w * flow_profit_alpha(j, a_j, a_o, x, alpha, spec);
                system(x - 1, successor(j, a_j, a_o) - 1) -= spec.beta * w;
            }
        }
    }
    return system.partialPivLu().solve(rhs);
}

}  // namespace

GameSpec GameSpec::with_alpha(const Alpha& a) const {
    GameSpec out = *this;
    out.lambda_rn = a[0];
    out.lambda_ec = a[1];
    return out;
}

void GameSpec::validate(bool allow_zero_beta) const {
    const double vals[] = {lambda_rn, lambda_ec, lambda_rs, lambda_fc[0], lambda_fc[1], beta};
    for (double v : vals) {
        if (!std::isfinite(v)) throw DomainError("game spec: non-finite parameter");
    }
    const bool beta_ok = allow_zero_beta ? (beta >= 0.0 && beta < 1.0) : (beta > 0.0 && beta < 1.0);
    if (!beta_ok) throw DomainError("game spec: beta must lie in (0,1)");
}

GameSpec design(int index) {
    GameSpec s;
    s.beta = 0.95;
    switch (index) {
        case 1:
            s.lambda_rn = 2.8; s.lambda_ec = 0.8; s.lambda_rs = 0.7; s.lambda_fc = {0.6, 0.4};
            break;
        case 2:
            s.lambda_rn = 2.0; s.lambda_ec = 1.8; s.lambda_rs = 0.2; s.lambda_fc = {0.01, 0.03};
            break;
        case 3:
            s.lambda_rn = 2.2; s.lambda_ec = 1.45; s.lambda_rs = 0.45; s.lambda_fc = {0.22, 0.29};
            break;
        default:
            throw DomainError("design index must be 1, 2 or 3");
    }
    return s;
}

int next_state(int a1, int a2) { return 1 + 2 * a1 + a2; }

int incumbency(int j, int x) {
    const int code = x - 1;
    return j == 1 ? (code >> 1) & 1 : code & 1;
}

double flow_profit(int j, int a_j, int a_opp, int x, const GameSpec& spec) {
    return flow_profit_alpha(j, a_j, a_opp, x, spec.alpha(), spec);
}

void require_interior(const Vec& p, const char* who) {
    if (p.size() != kDimP) {
        std::ostringstream msg;
        msg << who << ": CCP vector must have length " << kDimP << ", got " << p.size();
        throw DomainError(msg.str());
    }
    for (int i = 0; i < kDimP; ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0)) {
            std::ostringstream msg;
            msg << who << ": CCP entry " << i << " = " << p[i] << " is not in (0,1)";
            throw DomainError(msg.str());
        }
    }
}

Eigen::Matrix<double, 2, 4> ex_ante_values(const Vec& p, const Alpha& alpha, const GameSpec& spec) {
    require_interior(p, "ex_ante_values");
    Eigen::Matrix<double, 2, 4> v;
    for (int j = 1; j <= kPlayers; ++j) v.row(j - 1) = solve_values(j, p, alpha, spec).transpose();
    return v;
}

Vec best_response(const Alpha& alpha, const Vec& p, const GameSpec& spec) {
    require_interior(p, "best_response");
    Vec out(kDimP);
    for (int j = 1; j <= kPlayers; ++j) {
        const int opp = 3 - j;
        const Vec4 v = solve_values(j, p, alpha, spec);
        for (int x = 1; x <= kStates; ++x) {
            double u[2] = {0.0, 0.0};
            for (int a_j = 0; a_j <= 1; ++a_j) {
                for (int a_o = 0; a_o <= 1; ++a_o) {
                    u[a_j] += choice_prob(p, opp, a_o, x) *
                              (flow_profit_alpha(j, a_j, a_o, x, alpha, spec) +
                               spec.beta * v[successor(j, a_j, a_o) - 1]);
                }
            }
            out[ccp_index(j, x)] = 1.0 / (1.0 + std::exp(-(u[1] - u[0])));
        }
    }
    return out;
}

}  // namespace dyngame
