#include "dyngame/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyngame/equilibrium.hpp"
#include "dyngame/harness.hpp"

namespace dyngame {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DomainError("cannot write '" + out_path + "'");
    out << text;
}

nlohmann::json vec_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

nlohmann::json mat_json(const Mat& m) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
    return a;
}

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("DYNGAME_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Dynamic entry game: equilibrium, K-stage estimators and their asymptotics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON file with game parameters and run settings");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides base_seed)");
    app.add_option("--out", out_path, "Output file (default: stdout)");
    app.add_option("--threads", threads, "Worker threads (default: DYNGAME_THREADS or 1)")->check(CLI::PositiveNumber);

    auto* solve = app.add_subcommand("solve", "Solve the equilibrium and print P*, m* and the residual as JSON");

    auto* curve = app.add_subcommand("curve", "Asymptotic variance of K-PML and optimal K-MD against K (CSV)");
    int k_max = 0;
    curve->add_option("--k-max", k_max, "Largest K (default: config k_max or 20)")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "Draw a dataset from the equilibrium (CSV)");
    std::size_t sim_n = 0;
    simulate->add_option("--n", sim_n, "Number of records (default: config n)")->check(CLI::PositiveNumber);

    auto* estimate = app.add_subcommand("estimate", "Run a K-stage estimator on a dataset (JSON trace)");
    std::string data_path, criterion = "pml", weights = "optimal";
    int est_k = 1;
    estimate->add_option("--data", data_path, "Dataset CSV with header i,x,a1,a2,x_next")->required();
    estimate->add_option("--criterion", criterion, "pml or md")->check(CLI::IsMember({"pml", "md"}));
    estimate->add_option("--K", est_k, "Number of policy-iteration stages")->check(CLI::PositiveNumber);
    estimate->add_option("--weights", weights, "MD weights: optimal, optimal-last, pml or identity")
        ->check(CLI::IsMember({"optimal", "optimal-last", "pml", "identity"}));

    auto* mc = app.add_subcommand("mc", "Monte Carlo table of scaled variance and MSE (CSV)");
    auto* highorder = app.add_subcommand("highorder", "Moments of the high-order expansion term (CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        McConfig cfg;
        if (!config_path.empty()) cfg = config_from_json_text(read_file(config_path));
        if (*seed_opt) cfg.base_seed = seed;
        cfg.threads = resolve_threads(threads);

        std::ostringstream out;
        if (*solve) {
            const EquilibriumSolution eq = solve_equilibrium(cfg.spec);
            nlohmann::json j = {{"p_star", vec_json(eq.p_star)},
                                {"m_star", vec_json(eq.m_star)},
                                {"residual", eq.residual},
                                {"iterations", eq.iterations}};
            out << j.dump(2) << '\n';
        } else if (*curve) {
            write_curve_csv(variance_curve(cfg.spec, k_max > 0 ? k_max : cfg.k_max), out);
        } else if (*simulate) {
            const EquilibriumSolution eq = solve_equilibrium(cfg.spec);
            write_dataset_csv(draw_dataset(eq.p_star, eq.m_star, sim_n > 0 ? sim_n : cfg.n, cfg.base_seed), out);
        } else if (*estimate) {
            std::ifstream in(data_path);
            if (!in) throw DomainError("cannot open '" + data_path + "'");
            const Dataset ds = read_dataset_csv(in);
            WeightSchedule schedule = WeightSchedule::optimal_each_stage();
            if (weights == "optimal-last") schedule = WeightSchedule::optimal_last_only();
            if (weights == "pml") schedule = WeightSchedule::pml_equivalent();
            if (weights == "identity") schedule = WeightSchedule::fixed({Mat::Identity(kDimP, kDimP)});
            const Criterion crit = criterion == "pml" ? Criterion::Pml : Criterion::Md;
            const EstimationTrace tr = k_stage_estimate(ds, est_k, crit, schedule, cfg.spec);
            nlohmann::json stages = nlohmann::json::array();
            for (std::size_t k = 0; k < tr.alpha_by_stage.size(); ++k) {
                const OptimizerDiagnostics& dg = tr.diagnostics[k];
                nlohmann::json st = {{"stage", k + 1},
                                     {"alpha", vec_json(tr.alpha_by_stage[k])},
                                     {"ccp_prev", vec_json(tr.ccp_by_stage[k])},
                                     {"criterion", tr.criterion_by_stage[k]},
                                     {"evaluations", dg.evaluations},
                                     {"iterations", dg.iterations},
                                     {"converged", dg.converged},
                                     {"polished", dg.polished}};
                if (k < tr.weights.size()) st["weight"] = mat_json(tr.weights[k]);
                stages.push_back(st);
            }
            nlohmann::json j = {{"criterion", criterion}, {"K", est_k}, {"n", ds.n()},
                                {"stages", stages},       {"failed", tr.failed}};
            if (criterion == "md") j["weights"] = weights;
            if (tr.pilot_alpha) j["pilot_alpha"] = vec_json(*tr.pilot_alpha);
            if (tr.failed) j["failure"] = tr.failure;
            out << j.dump(2) << '\n';
            if (tr.failed) {
                emit(out.str(), out_path);
                std::cerr << "error: " << tr.failure << '\n';
                return 1;
            }
        } else if (*mc) {
            write_mc_csv(run_monte_carlo(cfg), out);
        } else if (*highorder) {
            write_highorder_csv(highorder_table(cfg.spec, cfg.S, cfg.n, cfg.k_list, cfg.base_seed, cfg.threads), out);
        }
        emit(out.str(), out_path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace dyngame
