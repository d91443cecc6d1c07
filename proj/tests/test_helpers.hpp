#pragma once

#include <cmath>
#include <random>

#include "dyngame/common.hpp"

namespace testing {

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double max_rel_diff(const dyngame::Mat& a, const dyngame::Mat& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

inline double max_abs_diff(const dyngame::Mat& a, const dyngame::Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Random interior CCP vector with entries in [lo, hi].
inline dyngame::Vec random_ccp(std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
    std::uniform_real_distribution<double> u(lo, hi);
    dyngame::Vec p(dyngame::kDimP);
    for (int i = 0; i < dyngame::kDimP; ++i) p[i] = u(rng);
    return p;
}

inline dyngame::Mat random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    dyngame::Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

// Random symmetric positive definite matrix with eigenvalues bounded below by `floor`.
inline dyngame::Mat random_spd(std::mt19937_64& rng, int n, double floor = 0.1) {
    const dyngame::Mat a = random_matrix(rng, n, n);
    return a * a.transpose() / n + floor * dyngame::Mat::Identity(n, n);
}

inline double min_eigenvalue(const dyngame::Mat& s) {
    Eigen::SelfAdjointEigenSolver<dyngame::Mat> es(dyngame::symmetrize(s), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace testing
