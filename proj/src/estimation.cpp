#include "dyngame/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace dyngame {

namespace {

double log_prob(const Vec& psi, int j, int x, int a) {
    const double p1 = psi[ccp_index(j, x)];
    return std::log(a == 1 ? p1 : 1.0 - p1);
}

// Newton step on f from x using central differences; returns true if it improved f.
bool newton_step(const std::function<double(const Vec&)>& f, Vec& x, double& fx) {
    const int d = static_cast<int>(x.size());
    const double hg = 1e-5;
    const double hh = 1e-4;
    Vec grad(d);
    Mat hess(d, d);
    for (int i = 0; i < d; ++i) {
        Vec up = x, dn = x;
        up[i] += hg;
        dn[i] -= hg;
        grad[i] = (f(up) - f(dn)) / (2.0 * hg);
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            Vec pp = x, pm = x, mp = x, mm = x;
            pp[i] += hh; pp[j] += hh;
            pm[i] += hh; pm[j] -= hh;
            mp[i] -= hh; mp[j] += hh;
            mm[i] -= hh; mm[j] -= hh;
            hess(i, j) = hess(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * hh * hh);
        }
    }
    Eigen::LLT<Mat> llt(hess);
    if (llt.info() != Eigen::Success) return false;
    const Vec trial = x - llt.solve(grad);
    const double ft = f(trial);
    if (!(ft <= fx)) return false;
    x = trial;
    fx = ft;
    return true;
}

Mat feasible_optimal_weight(const Alpha& alpha_plug, const Vec& p_plug, const CovarianceBundle& cov_hat,
                            const WeightSchedule& mode, int k, const GameSpec& spec) {
    const DerivativeBundle d = numerical_jacobians(alpha_plug, p_plug, spec);
    return schedule_weights(d, cov_hat, mode, k).back();
}

}  // namespace

double pml_criterion(const Alpha& alpha, const Vec& p_prev, const Dataset& ds, const GameSpec& spec) {
    if (ds.n() == 0) throw DomainError("pml_criterion: empty dataset");
    const Vec psi = best_response(alpha, p_prev, spec);
    double total = 0.0;
    for (const Record& r : ds.records) total += log_prob(psi, 1, r.x, r.a1) + log_prob(psi, 2, r.x, r.a2);
    return total / static_cast<double>(ds.n());
}

double pml_criterion(const Alpha& alpha, const Vec& p_prev, const CellCounts& c, const GameSpec& spec) {
    if (c.n <= 0) throw DomainError("pml_criterion: empty dataset");
    const Vec psi = best_response(alpha, p_prev, spec);
    double total = 0.0;
    for (int j = 1; j <= kPlayers; ++j) {
        for (int x = 1; x <= kStates; ++x) {
            const int i = ccp_index(j, x);
            const double ones = c.entries[i];
            const double zeros = c.state_visits[x - 1] - ones;
            if (ones > 0) total += ones * std::log(psi[i]);
            if (zeros > 0) total += zeros * std::log(1.0 - psi[i]);
        }
    }
    return total / static_cast<double>(c.n);
}

double md_criterion(const Alpha& alpha, const Vec& p_prev, const Vec& p_hat, const Mat& w, const GameSpec& spec) {
    const Vec r = p_hat - best_response(alpha, p_prev, spec);
    return r.dot(w * r);
}

OptimizerResult minimize(const std::function<double(const Vec&)>& f, const Vec& start, const OptimizerOptions& opt) {
    const int d = static_cast<int>(start.size());
    OptimizerResult res;
    int evals = 0;
    auto eval = [&](const Vec& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : INFINITY;
    };

    std::vector<Vec> simplex(d + 1, start);
    std::vector<double> values(d + 1);
    values[0] = eval(start);
    // Size each edge from a diagonal Newton probe so a start near the optimum gets a small simplex.
    const double hp = 1e-5;
    for (int i = 0; i < d; ++i) {
        const double scale = std::max(1.0, std::abs(start[i]));
        double step = opt.initial_step * scale;
        Vec up = start, dn = start;
        up[i] += hp;
        dn[i] -= hp;
        const double fu = eval(up);
        const double fd = eval(dn);
        const double curv = (fu - 2.0 * values[0] + fd) / (hp * hp);
        if (std::isfinite(fu) && std::isfinite(fd) && curv > 0.0) {
            const double newton = std::abs((fu - fd) / (2.0 * hp) / curv);
            step = std::clamp(2.0 * newton, 1e-8 * scale, step);
        }
        simplex[i + 1][i] += step;
    }
    for (int i = 1; i <= d; ++i) values[i] = eval(simplex[i]);

    std::vector<int> order(d + 1);
    int iterations = 0;
    bool converged = false;
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second = order[d - 1];

        double diameter = 0.0;
        for (int i = 0; i <= d; ++i) {
            diameter = std::max(diameter, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
        }
        if (diameter < opt.tol_diameter && values[worst] - values[best] < opt.tol_spread) {
            converged = true;
            break;
        }
        if (evals >= opt.max_evaluations) break;
        ++iterations;

        Vec centroid = Vec::Zero(d);
        for (int i = 0; i <= d; ++i) {
            if (i != worst) centroid += simplex[i];
        }
        centroid /= d;

        const Vec reflected = centroid + (centroid - simplex[worst]);
        const double fr = eval(reflected);
        if (fr < values[best]) {
            const Vec expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        // Contract toward the better of the reflected and worst points.
        const bool outside = fr < values[worst];
        const Vec contracted = outside ? Vec(centroid + 0.5 * (reflected - centroid))
                                       : Vec(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (int i = 0; i <= d; ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }

    const int best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
    res.x = simplex[best];
    res.value = values[best];
    res.diag.iterations = iterations;
    res.diag.converged = converged && std::isfinite(res.value);
    if (opt.newton_polish && res.diag.converged) {
        res.diag.polished = newton_step(eval, res.x, res.value);
    }
    res.diag.evaluations = evals;
    return res;
}

StageResult stage_optimize(Criterion criterion, const StageContext& ctx, const Alpha& alpha_start,
                           const OptimizerOptions& opt) {
    if (ctx.spec == nullptr) throw DomainError("stage_optimize: missing game spec");
    require_interior(ctx.p_prev, "stage_optimize");
    std::function<double(const Vec&)> f;
    if (criterion == Criterion::Pml) {
        if (ctx.counts == nullptr) throw DomainError("stage_optimize: PML needs cell counts");
        f = [&](const Vec& a) { return -pml_criterion(Alpha(a), ctx.p_prev, *ctx.counts, *ctx.spec); };
    } else {
        f = [&](const Vec& a) { return md_criterion(Alpha(a), ctx.p_prev, ctx.p_hat, ctx.w, *ctx.spec); };
    }
    const OptimizerResult r = minimize(f, alpha_start, opt);
    StageResult out;
    out.alpha_hat = r.x;
    out.criterion = criterion == Criterion::Pml ? -r.value : r.value;
    out.diag = r.diag;
    return out;
}

EstimationTrace k_stage_estimate(const Dataset& ds, int K, Criterion criterion, const WeightSchedule& schedule,
                                 const GameSpec& spec, const EstimateOptions& opt) {
    if (K < 1) throw DomainError("k_stage_estimate: K must be at least 1");
    if (ds.n() == 0) throw DomainError("k_stage_estimate: empty dataset");
    const CellCounts counts = cell_counts(ds);
    const Vec p_hat = frequency_ccp(counts);
    const Vec p0 = opt.p0 ? *opt.p0 : p_hat;
    require_interior(p0, "k_stage_estimate");

    EstimationTrace trace;
    StageContext ctx;
    ctx.spec = &spec;
    ctx.counts = &counts;
    ctx.p_hat = p_hat;

    CovarianceBundle cov_hat;
    Mat omega_inv;
    if (criterion == Criterion::Md) {
        cov_hat = covariance_bundle(p_hat, state_frequency(counts));
        omega_inv = omega_pp_inverse(p_hat, state_frequency(counts));
    }
    const bool optimal = schedule.mode == WeightSchedule::Mode::OptimalEachStage ||
                         schedule.mode == WeightSchedule::Mode::OptimalLastOnly;

    try {
        if (criterion == Criterion::Md && optimal) {
            ctx.p_prev = p0;
            ctx.w = omega_inv;
            const StageResult pilot = stage_optimize(Criterion::Md, ctx, opt.alpha_start, opt.optimizer);
            if (!pilot.diag.converged) throw DomainError("pilot minimum-distance stage did not converge");
            trace.pilot_alpha = pilot.alpha_hat;
        }

        Vec p_prev = p0;
        Alpha start = opt.alpha_start;
        for (int k = 1; k <= K; ++k) {
            ctx.p_prev = p_prev;
            trace.ccp_by_stage.push_back(p_prev);
            if (criterion == Criterion::Md) {
                const Alpha plug = k == 1 ? (trace.pilot_alpha ? *trace.pilot_alpha : start) : trace.alpha_by_stage.back();
                switch (schedule.mode) {
                    case WeightSchedule::Mode::PmlEquivalent:
                        ctx.w = omega_inv;
                        break;
                    case WeightSchedule::Mode::FixedList:
                        ctx.w = schedule.matrices.at(std::min<std::size_t>(k, schedule.matrices.size()) - 1);
                        validate_weight(ctx.w);
                        break;
                    case WeightSchedule::Mode::OptimalEachStage:
                        ctx.w = feasible_optimal_weight(plug, p_prev, cov_hat, schedule, k, spec);
                        break;
                    case WeightSchedule::Mode::OptimalLastOnly:
                        ctx.w = k < K ? omega_inv : feasible_optimal_weight(plug, p_prev, cov_hat, schedule, k, spec);
                        break;
                }
                trace.weights.push_back(ctx.w);
            }
            const StageResult r = stage_optimize(criterion, ctx, start, opt.optimizer);
            trace.alpha_by_stage.push_back(r.alpha_hat);
            trace.criterion_by_stage.push_back(r.criterion);
            trace.diagnostics.push_back(r.diag);
            if (!r.diag.converged && !trace.failed) {
                trace.failed = true;
                trace.failed_stage = k;
                trace.failure = "stage " + std::to_string(k) + ": optimizer did not converge";
            }
            p_prev = best_response(r.alpha_hat, p_prev, spec);
            start = r.alpha_hat;
        }
        trace.ccp_final = p_prev;
    } catch (const DomainError& e) {
        trace.failed = true;
        trace.failed_stage = static_cast<int>(trace.alpha_by_stage.size()) + 1;
        trace.failure = "stage " + std::to_string(trace.failed_stage) + ": " + e.what();
    }
    return trace;
}

}  // namespace dyngame
