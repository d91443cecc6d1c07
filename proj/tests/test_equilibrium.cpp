#include <doctest.h>

#include <chrono>
#include <random>

#include "dyngame/equilibrium.hpp"
#include "test_helpers.hpp"

using namespace dyngame;

TEST_CASE("each design converges from the uniform start") {
    for (int i = 1; i <= 3; ++i) {
        const GameSpec spec = design(i);
        const auto t0 = std::chrono::steady_clock::now();
        const EquilibriumSolution sol = solve_equilibrium(spec);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(sol.residual <= 1e-10);
        CHECK(secs < 0.1);
        const Vec br = best_response(spec.alpha(), sol.p_star, spec);
        CHECK((br - sol.p_star).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(sol.m_star.minCoeff() > 0.0);
        CHECK(sol.m_star.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("random restarts agree") {
    std::mt19937_64 rng(17);
    for (int i = 1; i <= 3; ++i) {
        const GameSpec spec = design(i);
        const Vec ref = solve_equilibrium(spec).p_star;
        double worst = 0.0;
        for (int r = 0; r < 100; ++r) {
            const Vec start = testing::random_ccp(rng, 0.01, 0.99);
            const EquilibriumSolution sol = solve_equilibrium(spec, start);
            worst = std::max(worst, (sol.p_star - ref).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("solving from the solution is idempotent") {
    for (int i = 1; i <= 3; ++i) {
        const GameSpec spec = design(i);
        const EquilibriumSolution first = solve_equilibrium(spec);
        const EquilibriumSolution again = solve_equilibrium(spec, first.p_star);
        CHECK(again.iterations <= 2);
        CHECK((again.p_star - first.p_star).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("iteration budget exhaustion reports the residual") {
    const GameSpec spec = design(1);
    const Vec start = Vec::Constant(kDimP, 0.5);
    try {
        solve_equilibrium(spec, start, 1e-12, 1);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.residual > 1e-12);
    }
    CHECK_THROWS_AS(solve_equilibrium(spec, start, 0.0), DomainError);
}

TEST_CASE("uniform beliefs give a uniform chain") {
    const Vec p = Vec::Constant(kDimP, 0.5);
    const Eigen::Matrix4d f = state_transition(p);
    CHECK((f.array() - 0.25).abs().maxCoeff() < 1e-15);
    const Vec m = stationary_distribution(p, design(1));
    CHECK((m.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("stationary law is a left fixed vector") {
    std::mt19937_64 rng(5);
    for (int r = 0; r < 20; ++r) {
        const Vec p = testing::random_ccp(rng);
        const Eigen::Matrix4d f = state_transition(p);
        CHECK((f.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
        const Vec m = stationary_distribution(p, design(1));
        const Eigen::RowVector4d mf = m.transpose() * f;
        CHECK((mf.transpose() - m).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("stationary law matches a long simulated path") {
    const GameSpec spec = design(1);
    const EquilibriumSolution sol = solve_equilibrium(spec);
    const Vec& p = sol.p_star;
    // Batch means over a path of 10^6 periods give standard errors that account for serial correlation.
    const int batches = 100, batch_len = 10000;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(batches, 4);
    int x = 1;
    for (int b = 0; b < batches; ++b) {
        for (int t = 0; t < batch_len; ++t) {
            freq(b, x - 1) += 1.0 / batch_len;
            const int a1 = u(rng) < p[ccp_index(1, x)] ? 1 : 0;
            const int a2 = u(rng) < p[ccp_index(2, x)] ? 1 : 0;
            x = 1 + 2 * a1 + a2;
        }
    }
    for (int s = 0; s < 4; ++s) {
        const double mean = freq.col(s).mean();
        const double sd = std::sqrt((freq.col(s).array() - mean).square().sum() / (batches - 1));
        const double se = sd / std::sqrt(static_cast<double>(batches));
        CHECK(std::abs(mean - sol.m_star[s]) <= 3.0 * se);
    }
}
