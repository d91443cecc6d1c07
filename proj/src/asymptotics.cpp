#include "dyngame/asymptotics.hpp"

#include <algorithm>
#include <cmath>

namespace dyngame {

namespace {

Mat checked_inverse(const Mat& m, const char* what) {
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) {
        throw DomainError(std::string(what) + ": singular matrix (rank " + std::to_string(lu.rank()) + " of " +
                          std::to_string(m.rows()) + ")");
    }
    return lu.inverse();
}

Mat identity(int n) { return Mat::Identity(n, n); }

// (Psi_alpha' W Psi_alpha)^{-1} Psi_alpha' W
Mat gmm_gain(const Mat& psi_alpha, const Mat& w) {
    const Mat info = psi_alpha.transpose() * w * psi_alpha;
    return checked_inverse(info, "Psi_alpha' W Psi_alpha") * psi_alpha.transpose() * w;
}

}  // namespace

DerivativeBundle numerical_jacobians(const Alpha& alpha, const Vec& p, const GameSpec& spec, double step_scale,
                                     bool check_rank) {
    require_interior(p, "numerical_jacobians");
    DerivativeBundle d;
    d.alpha_at = alpha;
    d.p_at = p;
    d.psi_alpha.resize(kDimP, kDimAlpha);
    d.psi_p.resize(kDimP, kDimP);
    d.psi_g = Mat::Zero(kDimP, 0);
    for (int i = 0; i < kDimAlpha; ++i) {
        const double h = 1e-6 * step_scale * std::max(1.0, std::abs(alpha[i]));
        Alpha up = alpha, dn = alpha;
        up[i] += h;
        dn[i] -= h;
        d.psi_alpha.col(i) = (best_response(up, p, spec) - best_response(dn, p, spec)) / (up[i] - dn[i]);
    }
    for (int i = 0; i < kDimP; ++i) {
        const double h = 1e-6 * step_scale;
        Vec up = p, dn = p;
        up[i] += h;
        dn[i] -= h;
        d.psi_p.col(i) = (best_response(alpha, up, spec) - best_response(alpha, dn, spec)) / (up[i] - dn[i]);
    }
    if (check_rank) validate_rank(d);
    return d;
}

void validate_rank(const DerivativeBundle& d) {
    Eigen::FullPivLU<Mat> lu_a(d.psi_alpha);
    lu_a.setThreshold(1e-10);
    if (lu_a.rank() < d.psi_alpha.cols()) throw DomainError("Psi_alpha does not have full column rank");
    const int dp = d.dim_p();
    Mat stacked(dp, dp + d.dim_g());
    stacked << identity(dp) - d.psi_p, -d.psi_g;
    Eigen::FullPivLU<Mat> lu_b(stacked);
    lu_b.setThreshold(1e-10);
    if (lu_b.rank() < dp) throw DomainError("[I - Psi_P, -Psi_g] does not have full row rank");
}

WeightSchedule WeightSchedule::fixed(std::vector<Mat> ws) {
    if (ws.empty()) throw DomainError("fixed weight schedule needs at least one matrix");
    for (const Mat& w : ws) validate_weight(w);
    WeightSchedule s;
    s.mode = Mode::FixedList;
    s.matrices = std::move(ws);
    return s;
}

WeightSchedule WeightSchedule::pml_equivalent() { return WeightSchedule{}; }

WeightSchedule WeightSchedule::optimal_each_stage() {
    WeightSchedule s;
    s.mode = Mode::OptimalEachStage;
    return s;
}

WeightSchedule WeightSchedule::optimal_last_only() {
    WeightSchedule s;
    s.mode = Mode::OptimalLastOnly;
    return s;
}

void validate_weight(const Mat& w) {
    if (w.rows() != w.cols() || w.rows() == 0) throw DomainError("weight matrix must be square");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw DomainError("weight matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(w), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError("weight matrix must be positive definite");
}

Mat projection(const Mat& psi_alpha, const Mat& w) { return psi_alpha * gmm_gain(psi_alpha, w); }

std::vector<Mat> schedule_weights(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s,
                                  int K) {
    if (K < 1) throw DomainError("K must be at least 1");
    const int dp = d.dim_p();
    const Mat omega_inv = symmetrize(checked_inverse(cov.omega_pp, "Omega_PP"));
    std::vector<Mat> ws;
    ws.reserve(K);
    switch (s.mode) {
        case WeightSchedule::Mode::PmlEquivalent:
            ws.assign(K, omega_inv);
            break;
        case WeightSchedule::Mode::FixedList:
            for (int k = 1; k <= K; ++k) {
                const Mat& w = s.matrices.at(std::min<std::size_t>(k, s.matrices.size()) - 1);
                validate_weight(w);
                ws.push_back(w);
            }
            break;
        case WeightSchedule::Mode::OptimalEachStage: {
            ws.push_back(optimal_first_weight(d, cov));
            Mat phi_p0 = identity(dp);
            for (int k = 2; k <= K; ++k) {
                const Mat pi = projection(d.psi_alpha, ws.back());
                phi_p0 = (identity(dp) - pi) * d.psi_p * phi_p0 + pi;
                ws.push_back(optimal_stage_weight(phi_p0, d.psi_p, cov.omega_pp));
            }
            break;
        }
        case WeightSchedule::Mode::OptimalLastOnly: {
            if (K == 1) {
                ws.push_back(optimal_first_weight(d, cov));
                break;
            }
            ws.assign(K - 1, omega_inv);
            const PhiSequence seq = phi_recursion(d, ws, K - 1);
            const Mat pi = projection(d.psi_alpha, ws.back());
            const Mat phi_p0 = (identity(dp) - pi) * d.psi_p * seq.phi_p0.back() + pi;
            ws.push_back(optimal_stage_weight(phi_p0, d.psi_p, cov.omega_pp));
            break;
        }
    }
    return ws;
}

PhiSequence phi_recursion(const DerivativeBundle& d, const std::vector<Mat>& weights, int K) {
    if (K < 1) throw DomainError("K must be at least 1");
    if (static_cast<int>(weights.size()) < K) throw DomainError("phi_recursion: fewer weights than stages");
    const int dp = d.dim_p();
    const int dg = d.dim_g();
    const Mat eye = identity(dp);

    PhiSequence seq;
    Mat phi_p = Mat::Zero(dp, dp), phi_0 = eye, phi_g = Mat::Zero(dp, dp);
    Mat ups_p = Mat::Zero(dp, dp), ups_0 = eye, ups_g = Mat::Zero(dp, dg);
    for (int k = 1; k <= K; ++k) {
        const Mat& w = weights[k - 1];
        seq.phi_p.push_back(phi_p);
        seq.phi_0.push_back(phi_0);
        seq.phi_g.push_back(phi_g);
        seq.phi_p0.push_back(phi_p + phi_0);
        seq.ups_p.push_back(ups_p);
        seq.ups_0.push_back(ups_0);
        seq.ups_g.push_back(ups_g);
        seq.weights.push_back(w);

        const Mat a = gmm_gain(d.psi_alpha, w);
        const Mat b = -a * d.psi_p;
        const Mat c = -a * d.psi_g;
        seq.a.push_back(a);
        seq.b.push_back(b);
        seq.c.push_back(c);

        const Mat pi = d.psi_alpha * a;
        const Mat resid = eye - pi;
        phi_p = resid * d.psi_p * phi_p + pi;
        phi_0 = resid * d.psi_p * phi_0;
        phi_g = resid * (eye + d.psi_p * phi_g);

        const Mat t = d.psi_p + d.psi_alpha * b;
        ups_p = t * ups_p + d.psi_alpha * a;
        ups_0 = t * ups_0;
        ups_g = t * ups_g + d.psi_g + d.psi_alpha * c;
    }
    return seq;
}

PhiSequence phi_recursion_pml(const DerivativeBundle& d, const Mat& omega_pp, int K) {
    const Mat w = symmetrize(checked_inverse(omega_pp, "Omega_PP"));
    return phi_recursion(d, std::vector<Mat>(K, w), K);
}

Mat sigma_from_phi(const DerivativeBundle& d, const CovarianceBundle& cov, const Mat& w_last, const Mat& phi_p,
                   const Mat& phi_0, const Mat& phi_g) {
    const int dp = d.dim_p();
    const int dg = d.dim_g();
    const Mat eye = identity(dp);
    Mat load(dp, 2 * dp + dg);
    load << eye - d.psi_p * phi_p, -d.psi_p * phi_0, -(eye + d.psi_p * phi_g) * d.psi_g;
    const Mat g = gmm_gain(d.psi_alpha, w_last) * load;
    return symmetrize(g * cov.stacked() * g.transpose());
}

Mat sigma_from_upsilon(const DerivativeBundle& d, const CovarianceBundle& cov, const PhiSequence& seq, int K) {
    const int dp = d.dim_p();
    const int dg = d.dim_g();
    const int i = K - 1;
    Mat coef(kDimAlpha, 2 * dp + dg);
    coef << seq.a[i] + seq.b[i] * seq.ups_p[i], seq.b[i] * seq.ups_0[i], seq.b[i] * seq.ups_g[i] + seq.c[i];
    return symmetrize(coef * cov.stacked() * coef.transpose());
}

std::vector<Mat> sigma_kpml_path(const DerivativeBundle& d, const CovarianceBundle& cov, int k_max) {
    const PhiSequence seq = phi_recursion_pml(d, cov.omega_pp, k_max);
    std::vector<Mat> out;
    for (int k = 1; k <= k_max; ++k) {
        out.push_back(sigma_from_phi(d, cov, seq.weights[k - 1], seq.phi_p[k - 1], seq.phi_0[k - 1],
                                     seq.phi_g[k - 1]));
    }
    return out;
}

Mat sigma_kpml(const DerivativeBundle& d, const CovarianceBundle& cov, int K) {
    return sigma_kpml_path(d, cov, K).back();
}

std::vector<Mat> sigma_kmd_path(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s,
                                int k_max) {
    std::vector<Mat> out;
    if (s.mode == WeightSchedule::Mode::OptimalLastOnly) {
        // The last-stage weight depends on K, so each K needs its own schedule.
        for (int k = 1; k <= k_max; ++k) out.push_back(sigma_kmd(d, cov, s, k));
        return out;
    }
    const std::vector<Mat> ws = schedule_weights(d, cov, s, k_max);
    const PhiSequence seq = phi_recursion(d, ws, k_max);
    for (int k = 1; k <= k_max; ++k) {
        out.push_back(sigma_from_phi(d, cov, ws[k - 1], seq.phi_p[k - 1], seq.phi_0[k - 1], seq.phi_g[k - 1]));
    }
    return out;
}

Mat sigma_kmd(const DerivativeBundle& d, const CovarianceBundle& cov, const WeightSchedule& s, int K) {
    const std::vector<Mat> ws = schedule_weights(d, cov, s, K);
    const PhiSequence seq = phi_recursion(d, ws, K);
    return sigma_from_phi(d, cov, ws[K - 1], seq.phi_p[K - 1], seq.phi_0[K - 1], seq.phi_g[K - 1]);
}

Mat optimal_first_weight(const DerivativeBundle& d, const CovarianceBundle& cov) {
    const int dp = d.dim_p();
    const Mat r = identity(dp) - d.psi_p;
    Mat bracket = r * cov.omega_pp * r.transpose();
    if (d.dim_g() > 0) {
        bracket += d.psi_g * cov.omega_gg * d.psi_g.transpose() -
                   d.psi_g * cov.omega_pg.transpose() * r.transpose() - r * cov.omega_pg * d.psi_g.transpose();
    }
    return symmetrize(checked_inverse(symmetrize(bracket), "optimal first-stage weight bracket"));
}

Mat optimal_stage_weight(const Mat& phi_p0, const Mat& psi_p, const Mat& omega_pp) {
    const int dp = static_cast<int>(psi_p.rows());
    const Mat m_inv = checked_inverse(identity(dp) - psi_p * phi_p0, "I - Psi_P Phi_{k,P0}");
    const Mat omega_inv = checked_inverse(omega_pp, "Omega_PP");
    return symmetrize(m_inv.transpose() * omega_inv * m_inv);
}

Mat sigma_star(const DerivativeBundle& d, const CovarianceBundle& cov) {
    const Mat w = optimal_first_weight(d, cov);
    return symmetrize(checked_inverse(d.psi_alpha.transpose() * w * d.psi_alpha, "Psi_alpha' W1 Psi_alpha"));
}

Mat mle_variance(const DerivativeBundle& d, const CovarianceBundle& cov, const Mat& mg) {
    const int dp = d.dim_p();
    const Mat r = identity(dp) - d.psi_p;
    Mat bracket = r * cov.omega_pp * r.transpose();
    if (d.dim_g() > 0) {
        if (mg.rows() != d.dim_g() || mg.cols() != d.dim_g()) {
            throw DomainError("mle_variance: M_g must be d_g x d_g when a nuisance parameter is present");
        }
        bracket += d.psi_g * checked_inverse(mg, "M_g") * d.psi_g.transpose();
    }
    const Mat inner = d.psi_alpha.transpose() * checked_inverse(symmetrize(bracket), "MLE bracket") * d.psi_alpha;
    return symmetrize(checked_inverse(inner, "MLE information"));
}

PsdGap psd_gap(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw DomainError("psd_gap: shape mismatch");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a - b), Eigen::EigenvaluesOnly);
    PsdGap g;
    g.min_eig = es.eigenvalues().minCoeff();
    g.is_psd = g.min_eig >= -1e-6 * std::abs(a.trace());
    return g;
}

}  // namespace dyngame
