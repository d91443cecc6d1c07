#pragma once

#include <cstdint>

#include "dyngame/asymptotics.hpp"

namespace dyngame {

// Second derivatives of Psi in lambda = (alpha', P')'. d2[j] is the full
// Hessian of coordinate j; h(j) = d2[j] / 2.
struct SecondDerivTensor {
    std::vector<Mat> d2;
    double max_asymmetry = 0.0;  // largest |raw[u,v] - raw[v,u]| before symmetrization
    Mat h(int j) const { return 0.5 * d2.at(j); }
    int dim_lambda() const { return d2.empty() ? 0 : static_cast<int>(d2.front().rows()); }
};

SecondDerivTensor second_derivatives(const Alpha& alpha, const Vec& p, const GameSpec& spec, double step = 1e-4);

// -Psi_alpha' ((I - Psi_P)')^{-1} Omega^{-1} (I - Psi_P)^{-1} Psi_alpha
Mat q_alpha(const DerivativeBundle& d, const Mat& omega_pp);

// Phi*_{k,0P} for k = 1..K under the infeasible optimal schedule.
std::vector<Mat> phi_star_sequence(const DerivativeBundle& d, const Mat& omega_pp, int K);

struct HighOrderSample {
    Vec r1, r2, r3, r_total, leading_term, scaled_phat_dev;
};

// Expansion terms of the optimal K-MD estimator at sqrt(n)(P-hat - P*).
HighOrderSample r_terms(const Vec& scaled_phat_dev, const DerivativeBundle& d, const SecondDerivTensor& t,
                        const Mat& omega_pp, int K);

// r_terms for every K = 1..k_max, sharing the stage recursion.
std::vector<HighOrderSample> r_terms_path(const Vec& scaled_phat_dev, const DerivativeBundle& d,
                                          const SecondDerivTensor& t, const Mat& omega_pp, int k_max);

struct HighOrderRow {
    int K = 0;
    Vec bias, var, mse;  // per alpha coordinate
};

// Moments over S replications of the high-order term n^{-1/2} R_{K,n}. This term
// lives on the sqrt(n)(alpha-hat - alpha*) scale, so its raw moments are the
// rescaled bias, variance and MSE of the n^{-1} R_{K,n} correction to alpha-hat.
std::vector<HighOrderRow> highorder_table(const GameSpec& spec, int S, std::size_t n, const std::vector<int>& k_list,
                                          std::uint64_t seed, int threads = 1);

}  // namespace dyngame
