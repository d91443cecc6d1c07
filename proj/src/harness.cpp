#include "dyngame/harness.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "dyngame/equilibrium.hpp"
#include "dyngame/parallel.hpp"

namespace dyngame {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("invalid JSON: ") + e.what());
    }
}

double number_at(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number()) throw DomainError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

GameSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("game spec must be a JSON object");
    GameSpec s;
    const bool has_design = j.contains("design");
    if (has_design) s = design(j.at("design").get<int>());
    const char* keys[] = {"lambda_rn", "lambda_ec", "lambda_rs", "lambda_fc1", "lambda_fc2", "beta"};
    double* slots[] = {&s.lambda_rn, &s.lambda_ec, &s.lambda_rs, &s.lambda_fc[0], &s.lambda_fc[1], &s.beta};
    for (int i = 0; i < 6; ++i) {
        if (j.contains(keys[i])) {
            *slots[i] = number_at(j, keys[i]);
        } else if (!has_design) {
            throw DomainError(std::string("game spec is missing '") + keys[i] + "'");
        }
    }
    s.validate();
    return s;
}

struct Moments {
    Vec var, mse;
};

Moments scaled_moments(const std::vector<Alpha>& draws, const Alpha& truth, std::size_t n) {
    Moments m{Vec::Zero(kDimAlpha), Vec::Zero(kDimAlpha)};
    if (draws.empty()) {
        m.var.setConstant(NAN);
        m.mse.setConstant(NAN);
        return m;
    }
    const double count = static_cast<double>(draws.size());
    Vec mean = Vec::Zero(kDimAlpha);
    for (const Alpha& a : draws) mean += a;
    mean /= count;
    for (const Alpha& a : draws) {
        m.var += (a - mean).cwiseAbs2();
        m.mse += (a - truth).cwiseAbs2();
    }
    const double scale = static_cast<double>(n) / count;
    m.var *= scale;
    m.mse *= scale;
    return m;
}

WeightSchedule schedule_for(const std::string& estimator, const McConfig& cfg) {
    if (estimator == "kmd-opt") return WeightSchedule::optimal_each_stage();
    if (estimator == "kmd-custom") {
        if (cfg.custom_weights.empty()) return WeightSchedule::fixed({Mat::Identity(kDimP, kDimP)});
        return WeightSchedule::fixed(cfg.custom_weights);
    }
    return WeightSchedule::pml_equivalent();
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

GameSpec spec_from_json_text(const std::string& text) { return spec_from_json(parse_json(text)); }

std::string spec_to_json_text(const GameSpec& s) {
    json j = {{"lambda_rn", s.lambda_rn}, {"lambda_ec", s.lambda_ec}, {"lambda_rs", s.lambda_rs},
              {"lambda_fc1", s.lambda_fc[0]}, {"lambda_fc2", s.lambda_fc[1]}, {"beta", s.beta}};
    return j.dump(2);
}

void McConfig::validate() const {
    spec.validate();
    if (S < 1) throw DomainError("config: S must be at least 1");
    if (n < 1) throw DomainError("config: n must be at least 1");
    if (k_list.empty()) throw DomainError("config: k_list must be nonempty");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 1 || (i > 0 && k_list[i] <= k_list[i - 1])) {
            throw DomainError("config: k_list must be positive and strictly increasing");
        }
    }
    if (k_max < 1) throw DomainError("config: k_max must be at least 1");
    for (const std::string& e : estimators) {
        if (e != "kpml" && e != "kmd-opt" && e != "kmd-custom") {
            throw DomainError("config: unknown estimator '" + e + "'");
        }
    }
    for (const Mat& w : custom_weights) {
        if (w.rows() != kDimP || w.cols() != kDimP) throw DomainError("config: custom weights must be 8x8");
        validate_weight(w);
    }
}

McConfig config_from_json_text(const std::string& text) {
    const json j = parse_json(text);
    McConfig cfg;
    try {
        cfg.spec = spec_from_json(j);
        if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
        if (j.contains("S")) cfg.S = j.at("S").get<int>();
        if (j.contains("k_list")) cfg.k_list = j.at("k_list").get<std::vector<int>>();
        if (j.contains("estimators")) cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
        if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
        if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<int>();
        if (j.contains("custom_weights")) {
            for (const json& w : j.at("custom_weights")) {
                const auto rows = w.get<std::vector<std::vector<double>>>();
                Mat m(rows.size(), rows.empty() ? 0 : rows.front().size());
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    if (rows[r].size() != static_cast<std::size_t>(m.cols())) {
                        throw DomainError("config: ragged custom weight matrix");
                    }
                    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
                }
                cfg.custom_weights.push_back(m);
            }
        }
    } catch (const json::exception& e) {
        throw DomainError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

McReport run_monte_carlo(const McConfig& cfg) {
    cfg.validate();
    const EquilibriumSolution eq = solve_equilibrium(cfg.spec);
    const Alpha truth = cfg.spec.alpha();
    const int k_max = cfg.k_list.back();
    const std::size_t n_est = cfg.estimators.size();
    const std::size_t n_k = cfg.k_list.size();

    // estimates[s][e][i]: alpha-hat of estimator e at K = k_list[i], empty when failed
    std::vector<std::vector<std::vector<std::optional<Alpha>>>> estimates(
        cfg.S, std::vector<std::vector<std::optional<Alpha>>>(n_est, std::vector<std::optional<Alpha>>(n_k)));

    parallel_for(cfg.S, cfg.threads, [&](std::size_t s) {
        const Dataset ds = draw_dataset(eq.p_star, eq.m_star, cfg.n, cfg.base_seed ^ static_cast<std::uint64_t>(s + 1));
        for (std::size_t e = 0; e < n_est; ++e) {
            const std::string& name = cfg.estimators[e];
            const Criterion crit = name == "kpml" ? Criterion::Pml : Criterion::Md;
            const EstimationTrace tr = k_stage_estimate(ds, k_max, crit, schedule_for(name, cfg), cfg.spec);
            for (std::size_t i = 0; i < n_k; ++i) {
                const int K = cfg.k_list[i];
                const bool ok = !tr.failed || K < tr.failed_stage;
                if (ok && static_cast<int>(tr.alpha_by_stage.size()) >= K) estimates[s][e][i] = tr.alpha_by_stage[K - 1];
            }
        }
    });

    McReport report;
    for (std::size_t e = 0; e < n_est; ++e) {
        for (std::size_t i = 0; i < n_k; ++i) {
            std::vector<Alpha> draws;
            for (int s = 0; s < cfg.S; ++s) {
                if (estimates[s][e][i]) draws.push_back(*estimates[s][e][i]);
            }
            const Moments m = scaled_moments(draws, truth, cfg.n);
            McRow row;
            row.estimator = cfg.estimators[e];
            row.n = cfg.n;
            row.K = cfg.k_list[i];
            row.scaled_var = m.var;
            row.scaled_mse = m.mse;
            row.failures = cfg.S - static_cast<int>(draws.size());
            report.rows.push_back(row);
        }
    }

    const DerivativeBundle d = numerical_jacobians(truth, eq.p_star, cfg.spec);
    const CovarianceBundle cov = covariance_bundle(eq.p_star, eq.m_star);
    for (const std::string& name : cfg.estimators) {
        const std::vector<Mat> path = name == "kpml" ? sigma_kpml_path(d, cov, k_max)
                                                     : sigma_kmd_path(d, cov, schedule_for(name, cfg), k_max);
        for (int K : cfg.k_list) {
            McRow row;
            row.estimator = name + "-asy";
            row.n = cfg.n;
            row.K = K;
            row.scaled_var = path[K - 1].diagonal();
            row.scaled_mse = row.scaled_var;
            report.asy_rows.push_back(row);
        }
    }
    return report;
}

void write_mc_csv(const McReport& report, std::ostream& os) {
    os << "estimator,n,K,var_rn,mse_rn,var_ec,mse_ec,failures\n";
    auto emit = [&](const McRow& r) {
        os << r.estimator << ',' << r.n << ',' << r.K << ',' << format_number(r.scaled_var[0]) << ','
           << format_number(r.scaled_mse[0]) << ',' << format_number(r.scaled_var[1]) << ','
           << format_number(r.scaled_mse[1]) << ',' << r.failures << '\n';
    };
    for (const McRow& r : report.rows) emit(r);
    for (const McRow& r : report.asy_rows) emit(r);
}

std::vector<CurveRow> variance_curve(const GameSpec& spec, int k_max) {
    if (k_max < 1) throw DomainError("variance_curve: k_max must be at least 1");
    const EquilibriumSolution eq = solve_equilibrium(spec);
    const DerivativeBundle d = numerical_jacobians(spec.alpha(), eq.p_star, spec);
    const CovarianceBundle cov = covariance_bundle(eq.p_star, eq.m_star);
    const std::vector<Mat> pml = sigma_kpml_path(d, cov, k_max);
    const std::vector<Mat> opt = sigma_kmd_path(d, cov, WeightSchedule::optimal_each_stage(), k_max);
    std::vector<CurveRow> rows;
    for (int k = 1; k <= k_max; ++k) {
        rows.push_back({k, pml[k - 1](0, 0), pml[k - 1](1, 1), opt[k - 1](0, 0), opt[k - 1](1, 1)});
    }
    return rows;
}

void write_curve_csv(const std::vector<CurveRow>& rows, std::ostream& os) {
    os << "K,kpml_11,kpml_22,kmdopt_11,kmdopt_22\n";
    for (const CurveRow& r : rows) {
        os << r.K << ',' << format_number(r.kpml_11) << ',' << format_number(r.kpml_22) << ','
           << format_number(r.kmdopt_11) << ',' << format_number(r.kmdopt_22) << '\n';
    }
}

void write_highorder_csv(const std::vector<HighOrderRow>& rows, std::ostream& os) {
    os << "K,bias_rn,var_rn,mse_rn,bias_ec,var_ec,mse_ec\n";
    for (const HighOrderRow& r : rows) {
        os << r.K << ',' << format_number(r.bias[0]) << ',' << format_number(r.var[0]) << ','
           << format_number(r.mse[0]) << ',' << format_number(r.bias[1]) << ',' << format_number(r.var[1]) << ','
           << format_number(r.mse[1]) << '\n';
    }
}

}  // namespace dyngame
