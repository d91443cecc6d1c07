#include "dyngame/highorder.hpp"

#include <cmath>

#include "dyngame/equilibrium.hpp"
#include "dyngame/parallel.hpp"

namespace dyngame {

namespace {

Mat inverse_or_throw(const Mat& m, const char* what) {
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw DomainError(std::string(what) + ": singular matrix");
    return lu.inverse();
}

// Quantities that depend on K but not on the sample.
struct StageConstants {
    Mat phi;                 // Phi*_{K,0P}
    Mat weight;              // W*_K
    std::vector<Mat> u;      // U_{a,K}, a = 1..d_alpha
    Mat r3_gain;             // q^{-1} G (I - Psi_P Phi)^{-1} Psi_P
};

class Expansion {
public:
    Expansion(const DerivativeBundle& d, const SecondDerivTensor& t, const Mat& omega_pp, int k_max)
        : d_(d), t_(t) {
        const int dp = d.dim_p();
        if (d.dim_g() != 0) throw DomainError("high-order terms require a game without nuisance parameters");
        if (t.dim_lambda() != kDimAlpha + dp || static_cast<int>(t.d2.size()) != dp) {
            throw DomainError("second-derivative tensor has the wrong shape");
        }
        const Mat eye = Mat::Identity(dp, dp);
        const Mat omega_inv = inverse_or_throw(omega_pp, "Omega_PP");
        q_inv_ = inverse_or_throw(q_alpha(d, omega_pp), "q_alpha");
        g_ = d.psi_alpha.transpose() * inverse_or_throw((eye - d.psi_p).transpose(), "I - Psi_P") * omega_inv;
        jac_.resize(dp, kDimAlpha + dp);
        jac_ << d.psi_alpha, d.psi_p;

        const std::vector<Mat> phis = phi_star_sequence(d, omega_pp, k_max);
        for (int k = 1; k <= k_max; ++k) {
            StageConstants c;
            c.phi = phis[k - 1];
            const Mat m_inv = inverse_or_throw(eye - d.psi_p * c.phi, "I - Psi_P Phi*_{K,0P}");
            c.weight = m_inv.transpose() * omega_inv * m_inv;
            for (int a = 0; a < kDimAlpha; ++a) {
                Mat cross(dp, kDimAlpha + dp);
                for (int j = 0; j < dp; ++j) cross.row(j) = t.d2[j].row(a);
                const Mat first = cross.transpose() * c.weight * jac_;
                const Vec wcol = c.weight * d.psi_alpha.col(a);
                Mat third = Mat::Zero(kDimAlpha + dp, kDimAlpha + dp);
                for (int j = 0; j < dp; ++j) third += wcol[j] * t.d2[j];
                c.u.push_back(0.5 * (first + first.transpose() + third));
            }
            c.r3_gain = q_inv_ * g_ * m_inv * d.psi_p;
            stages_.push_back(std::move(c));
        }
    }

    std::vector<HighOrderSample> path(const Vec& z) const {
        const int dp = d_.dim_p();
        if (z.size() != dp) throw DomainError("scaled CCP deviation must have length d_P");
        const Vec lead = -q_inv_ * (g_ * z);
        Vec r5 = Vec::Zero(dp);
        std::vector<HighOrderSample> out;
        for (std::size_t k = 1; k <= stages_.size(); ++k) {
            const StageConstants& c = stages_[k - 1];
            Vec v(kDimAlpha + dp);
            v << lead, c.phi * z;

            Vec quad_u(kDimAlpha);
            for (int a = 0; a < kDimAlpha; ++a) quad_u[a] = v.dot(c.u[a] * v);

            const Vec wz = c.weight * z;
            const Vec phiz = c.phi * z;
            Vec inner = Vec::Zero(kDimAlpha);
            for (int j = 0; j < dp; ++j) {
                const Mat& h2 = t_.d2[j];
                inner += wz[j] * (-h2.block(0, kDimAlpha, kDimAlpha, dp) * phiz -
                                  h2.block(0, 0, kDimAlpha, kDimAlpha) * lead);
            }

            HighOrderSample s;
            s.scaled_phat_dev = z;
            s.leading_term = lead;
            s.r1 = q_inv_ * quad_u;
            s.r2 = q_inv_ * inner;
            s.r3 = k == 1 ? Vec::Zero(kDimAlpha) : Vec(c.r3_gain * r5);
            s.r_total = s.r1 + s.r2 + s.r3;

            Vec quad_h(dp);
            for (int j = 0; j < dp; ++j) quad_h[j] = 0.5 * v.dot(t_.d2[j] * v);
            r5 = d_.psi_p * r5 + d_.psi_alpha * s.r_total + quad_h;
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    const DerivativeBundle& d_;
    const SecondDerivTensor& t_;
    Mat q_inv_, g_, jac_;
    std::vector<StageConstants> stages_;
};

}  // namespace

SecondDerivTensor second_derivatives(const Alpha& alpha, const Vec& p, const GameSpec& spec, double step) {
    require_interior(p, "second_derivatives");
    const int dl = kDimAlpha + kDimP;
    Vec lambda(dl);
    lambda << alpha, p;
    auto psi = [&](const Vec& l) { return best_response(l.head(kDimAlpha), l.tail(kDimP), spec); };

    std::vector<Mat> raw(kDimP, Mat::Zero(dl, dl));
    const Vec f0 = psi(lambda);
    for (int u = 0; u < dl; ++u) {
        for (int v = 0; v < dl; ++v) {
            Vec col(kDimP);
            if (u == v) {
                Vec up = lambda, dn = lambda;
                up[u] += step;
                dn[u] -= step;
                col = (psi(up) - 2.0 * f0 + psi(dn)) / (step * step);
            } else {
                Vec pp = lambda, pm = lambda, mp = lambda, mm = lambda;
                pp[u] += step; pp[v] += step;
                pm[u] += step; pm[v] -= step;
                mp[u] -= step; mp[v] += step;
                mm[u] -= step; mm[v] -= step;
                col = (psi(pp) - psi(pm) - psi(mp) + psi(mm)) / (4.0 * step * step);
            }
            for (int j = 0; j < kDimP; ++j) raw[j](u, v) = col[j];
        }
    }
    SecondDerivTensor t;
    for (int j = 0; j < kDimP; ++j) {
        t.max_asymmetry = std::max(t.max_asymmetry, (raw[j] - raw[j].transpose()).cwiseAbs().maxCoeff());
        t.d2.push_back(symmetrize(raw[j]));
    }
    return t;
}

Mat q_alpha(const DerivativeBundle& d, const Mat& omega_pp) {
    const int dp = d.dim_p();
    const Mat r_inv = inverse_or_throw(Mat::Identity(dp, dp) - d.psi_p, "I - Psi_P");
    const Mat omega_inv = inverse_or_throw(omega_pp, "Omega_PP");
    return symmetrize(-(d.psi_alpha.transpose() * r_inv.transpose() * omega_inv * r_inv * d.psi_alpha));
}

std::vector<Mat> phi_star_sequence(const DerivativeBundle& d, const Mat& omega_pp, int K) {
    if (K < 1) throw DomainError("K must be at least 1");
    const int dp = d.dim_p();
    const Mat eye = Mat::Identity(dp, dp);
    const Mat q_inv = inverse_or_throw(q_alpha(d, omega_pp), "q_alpha");
    const Mat shift = d.psi_alpha * q_inv * d.psi_alpha.transpose() *
                      inverse_or_throw(eye - d.psi_p.transpose(), "I - Psi_P'") *
                      inverse_or_throw(omega_pp, "Omega_PP");
    std::vector<Mat> out{eye};
    for (int k = 2; k <= K; ++k) out.push_back(d.psi_p * out.back() - shift);
    return out;
}

std::vector<HighOrderSample> r_terms_path(const Vec& scaled_phat_dev, const DerivativeBundle& d,
                                          const SecondDerivTensor& t, const Mat& omega_pp, int k_max) {
    if (k_max < 1) throw DomainError("K must be at least 1");
    return Expansion(d, t, omega_pp, k_max).path(scaled_phat_dev);
}

HighOrderSample r_terms(const Vec& scaled_phat_dev, const DerivativeBundle& d, const SecondDerivTensor& t,
                        const Mat& omega_pp, int K) {
    return r_terms_path(scaled_phat_dev, d, t, omega_pp, K).back();
}

std::vector<HighOrderRow> highorder_table(const GameSpec& spec, int S, std::size_t n, const std::vector<int>& k_list,
                                          std::uint64_t seed, int threads) {
    if (S < 1 || n < 1 || k_list.empty()) throw DomainError("highorder_table: need S >= 1, n >= 1 and some K");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 1 || (i > 0 && k_list[i] <= k_list[i - 1])) {
            throw DomainError("highorder_table: K list must be positive and strictly increasing");
        }
    }
    const EquilibriumSolution eq = solve_equilibrium(spec);
    const DerivativeBundle d = numerical_jacobians(spec.alpha(), eq.p_star, spec);
    const SecondDerivTensor t = second_derivatives(spec.alpha(), eq.p_star, spec);
    const Mat omega = omega_pp(eq.p_star, eq.m_star);
    const Expansion engine(d, t, omega, k_list.back());
    const double root_n = std::sqrt(static_cast<double>(n));

    // terms[s][i] = n^{-1/2} R_{K,n} for K = k_list[i]
    std::vector<std::vector<Vec>> terms(S);
    parallel_for(S, threads, [&](std::size_t s) {
        const Dataset ds = draw_dataset(eq.p_star, eq.m_star, n, seed ^ static_cast<std::uint64_t>(s + 1));
        const Vec z = root_n * (frequency_ccp(ds) - eq.p_star);
        const std::vector<HighOrderSample> path = engine.path(z);
        for (int k : k_list) terms[s].push_back(path[k - 1].r_total / root_n);
    });

    std::vector<HighOrderRow> rows;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        Vec sum = Vec::Zero(kDimAlpha), sq = Vec::Zero(kDimAlpha);
        for (int s = 0; s < S; ++s) {
            sum += terms[s][i];
            sq += terms[s][i].cwiseAbs2();
        }
        HighOrderRow row;
        row.K = k_list[i];
        row.bias = sum / S;
        row.mse = sq / S;
        Vec centered = Vec::Zero(kDimAlpha);
        for (int s = 0; s < S; ++s) centered += (terms[s][i] - row.bias).cwiseAbs2();
        row.var = centered / S;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace dyngame
