#pragma once

#include <utility>

#include "dyngame/game_model.hpp"
#include "dyngame/sampling.hpp"

namespace dyngame {

struct DerivativeBundle {
    Mat psi_alpha;  // d_P x d_alpha
    Mat psi_p;      // d_P x d_P
    Mat psi_g;      // d_P x d_g (zero columns for the shipped game)
    Alpha alpha_at = Alpha::Zero();
    Vec p_at;
    int dim_p() const { return static_cast<int>(psi_p.rows()); }
    int dim_g() const { return static_cast<int>(psi_g.cols()); }
};

// Central-difference Jacobians of Psi at (alpha, p). step_scale multiplies the
// default steps (1e-6 max(1,|alpha_i|) and 1e-6) for step-halving checks.
DerivativeBundle numerical_jacobians(const Alpha& alpha, const Vec& p, const GameSpec& spec,
                                     double step_scale = 1.0, bool check_rank = true);

// Throws DomainError unless Psi_alpha has full column rank and [I - Psi_P, -Psi_g] full row rank.
void validate_rank(const DerivativeBundle& d);

// A weight schedule for K-stage minimum distance.
struct WeightSchedule {
    enum class Mode { FixedList, PmlEquivalent, OptimalEachStage, OptimalLastOnly };
    Mode mode = Mode::PmlEquivalent;
    std::vector<Mat> matrices;  // used by FixedList; stage k uses matrices[min(k, size) - 1]

    static WeightSchedule fixed(std::vector<Mat> ws);
    static WeightSchedule pml_equivalent();
    static WeightSchedule optimal_each_stage();
    static WeightSchedule optimal_last_only();
};

// Throws DomainError unless w is symmetric (1e-12 relative) and positive definite.
void validate_weight(const Mat& w);

// Phi and Upsilon sequences for stages k = 1..K (index k-1).
struct PhiSequence {
    std::vector<Mat> phi_p, phi_0, phi_g, phi_p0;
    std::vector<Mat> weights;            // W_k actually used
    std::vector<Mat> a, b, c;            // A_k, B_k, C_k
    std::vector<Mat> ups_p, ups_0, ups_g;  // Upsilon_{k,.}
};

// Projection Psi_alpha (Psi_alpha' W Psi_alpha)^{-1} Psi_alpha' W.
Mat projection(const Mat& psi_alpha, const Mat& w);

// Concrete W_1..W_K for a schedule evaluated at the given derivatives.
std::vector<Mat> schedule_weights(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s,
                                  int K);

// Runs the recursions for K stages under the given weights (size >= K).
PhiSequence phi_recursion(const DerivativeBundle& d, const std::vector<Mat>& weights, int K);
// PML recursion: W_k = Omega_PP^{-1} at every stage.
PhiSequence phi_recursion_pml(const DerivativeBundle& d, const Mat& omega_pp, int K);

// Sigma of the K-stage estimator whose last-stage weight is w_last, from the Phi route.
Mat sigma_from_phi(const DerivativeBundle& d, const CovarianceBundle& cov, const Mat& w_last,
                   const Mat& phi_p, const Mat& phi_0, const Mat& phi_g);
// Same matrix assembled from the A/B/C and Upsilon constants of stage K.
Mat sigma_from_upsilon(const DerivativeBundle& d, const CovarianceBundle& cov, const PhiSequence& seq, int K);

Mat sigma_kpml(const DerivativeBundle& d, const CovarianceBundle& cov, int K);
Mat sigma_kmd(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s, int K);
// Sigma for K = 1..k_max from one pass of the recursion.
std::vector<Mat> sigma_kpml_path(const DerivativeBundle& d, const CovarianceBundle& cov, int k_max);
std::vector<Mat> sigma_kmd_path(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s,
                                int k_max);

Mat optimal_first_weight(const DerivativeBundle& d, const CovarianceBundle& cov);
Mat optimal_stage_weight(const Mat& phi_p0, const Mat& psi_p, const Mat& omega_pp);
Mat sigma_star(const DerivativeBundle& d, const CovarianceBundle& cov);
// mg may be empty when the game has no nuisance parameter.
Mat mle_variance(const DerivativeBundle& d, const CovarianceBundle& cov, const Mat& mg);

struct PsdGap {
    bool is_psd = false;
    double min_eig = 0.0;
};
// Eigenvalues of a - b; PSD when the smallest is at least -1e-6 trace(a).
PsdGap psd_gap(const Mat& a, const Mat& b);

}  // namespace dyngame
