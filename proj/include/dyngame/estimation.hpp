#pragma once

#include <functional>
#include <optional>

#include "dyngame/asymptotics.hpp"
#include "dyngame/sampling.hpp"

namespace dyngame {

enum class Criterion { Pml, Md };

// Mean over records of ln Psi_1(a1|x) + ln Psi_2(a2|x) at Psi(alpha, p_prev).
double pml_criterion(const Alpha& alpha, const Vec& p_prev, const Dataset& ds, const GameSpec& spec);
// Same value from cell counts.
double pml_criterion(const Alpha& alpha, const Vec& p_prev, const CellCounts& counts, const GameSpec& spec);

// (p_hat - Psi(alpha, p_prev))' W (p_hat - Psi(alpha, p_prev)), to be minimized.
double md_criterion(const Alpha& alpha, const Vec& p_prev, const Vec& p_hat, const Mat& w, const GameSpec& spec);

struct OptimizerOptions {
    double initial_step = 0.1;
    double tol_diameter = 1e-9;
    double tol_spread = 1e-12;
    int max_evaluations = 2000;
    bool newton_polish = true;
};

struct OptimizerDiagnostics {
    int evaluations = 0;
    int iterations = 0;
    bool converged = false;
    bool polished = false;
};

struct OptimizerResult {
    Eigen::VectorXd x;
    double value = 0.0;
    OptimizerDiagnostics diag;
};

// Nelder-Mead minimization followed by one optional Newton step with
// finite-difference derivatives, kept only when the Hessian is PD and the
// value does not increase.
OptimizerResult minimize(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& start,
                         const OptimizerOptions& opt = {});

// Everything a single stage needs besides alpha.
struct StageContext {
    const GameSpec* spec = nullptr;
    Vec p_prev;
    const CellCounts* counts = nullptr;  // PML
    Vec p_hat;                           // MD
    Mat w;                               // MD
};

struct StageResult {
    Alpha alpha_hat = Alpha::Zero();
    double criterion = 0.0;  // PML: log-likelihood (maximized); MD: distance (minimized)
    OptimizerDiagnostics diag;
};

StageResult stage_optimize(Criterion criterion, const StageContext& ctx, const Alpha& alpha_start,
                           const OptimizerOptions& opt = {});

struct EstimationTrace {
    std::vector<Alpha> alpha_by_stage;  // alpha_1 .. alpha_K
    std::vector<Vec> ccp_by_stage;      // P_0 .. P_{K-1}
    Vec ccp_final;                      // P_K
    std::vector<double> criterion_by_stage;
    std::vector<OptimizerDiagnostics> diagnostics;
    std::vector<Mat> weights;  // MD weights used at each stage
    std::optional<Alpha> pilot_alpha;
    bool failed = false;
    int failed_stage = 0;  // first failing stage (1-based), 0 when none
    std::string failure;
};

struct EstimateOptions {
    Alpha alpha_start = Alpha::Zero();
    std::optional<Vec> p0;  // defaults to the frequency CCPs
    OptimizerOptions optimizer;
};

EstimationTrace k_stage_estimate(const Dataset& ds, int K, Criterion criterion, const WeightSchedule& schedule,
                                 const GameSpec& spec, const EstimateOptions& opt = {});

}  // namespace dyngame
