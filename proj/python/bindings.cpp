#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dyngame/equilibrium.hpp"
#include "dyngame/harness.hpp"

namespace py = pybind11;
using namespace dyngame;

namespace {

GameSpec make_spec(double lambda_rn, double lambda_ec, double lambda_rs, double lambda_fc1, double lambda_fc2,
                   double beta) {
    GameSpec s;
    s.lambda_rn = lambda_rn;
    s.lambda_ec = lambda_ec;
    s.lambda_rs = lambda_rs;
    s.lambda_fc = {lambda_fc1, lambda_fc2};
    s.beta = beta;
    s.validate();
    return s;
}

struct TruthPoint {
    DerivativeBundle d;
    CovarianceBundle cov;
};

TruthPoint at_truth(const GameSpec& spec) {
    const EquilibriumSolution eq = solve_equilibrium(spec);
    return {numerical_jacobians(spec.alpha(), eq.p_star, spec), covariance_bundle(eq.p_star, eq.m_star)};
}

WeightSchedule schedule_from_name(const std::string& name) {
    if (name == "optimal") return WeightSchedule::optimal_each_stage();
    if (name == "optimal-last") return WeightSchedule::optimal_last_only();
    if (name == "pml") return WeightSchedule::pml_equivalent();
    if (name == "identity") return WeightSchedule::fixed({Mat::Identity(kDimP, kDimP)});
    throw DomainError("unknown weight schedule '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dynamic entry game: equilibrium, K-stage estimators and their asymptotic variances";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

    py::class_<GameSpec>(m, "GameSpec")
        .def(py::init(&make_spec), py::arg("lambda_rn"), py::arg("lambda_ec"), py::arg("lambda_rs"),
             py::arg("lambda_fc1"), py::arg("lambda_fc2"), py::arg("beta"))
        .def_readwrite("lambda_rn", &GameSpec::lambda_rn)
        .def_readwrite("lambda_ec", &GameSpec::lambda_ec)
        .def_readwrite("lambda_rs", &GameSpec::lambda_rs)
        .def_readwrite("beta", &GameSpec::beta)
        .def_property_readonly("lambda_fc", [](const GameSpec& s) { return py::make_tuple(s.lambda_fc[0], s.lambda_fc[1]); })
        .def("alpha", &GameSpec::alpha)
        .def("to_json", &spec_to_json_text)
        .def_static("from_json", &spec_from_json_text);

    m.def("design", &design, py::arg("index"), "One of the three Monte Carlo designs (1, 2 or 3)");

    m.def("best_response", &best_response, py::arg("alpha"), py::arg("p"), py::arg("spec"));

    m.def(
        "solve_equilibrium",
        [](const GameSpec& spec, double tol) {
            const EquilibriumSolution eq = solve_equilibrium(spec, Vec::Constant(kDimP, 0.5), tol);
            py::dict out;
            out["p_star"] = eq.p_star;
            out["m_star"] = eq.m_star;
            out["residual"] = eq.residual;
            out["iterations"] = eq.iterations;
            return out;
        },
        py::arg("spec"), py::arg("tol") = 1e-12);

    m.def(
        "draw_dataset",
        [](const GameSpec& spec, std::size_t n, std::uint64_t seed) {
            const EquilibriumSolution eq = solve_equilibrium(spec);
            const Dataset ds = draw_dataset(eq.p_star, eq.m_star, n, seed);
            Eigen::MatrixXi rec(ds.n(), 4);
            for (std::size_t i = 0; i < ds.n(); ++i) {
                const Record& r = ds.records[i];
                rec.row(i) << r.x, r.a1, r.a2, r.x_next;
            }
            return rec;
        },
        py::arg("spec"), py::arg("n"), py::arg("seed"),
        "Records as an (n, 4) integer array with columns x, a1, a2, x_next");

    m.def(
        "estimate",
        [](const Eigen::MatrixXi& records, const GameSpec& spec, int K, const std::string& criterion,
           const std::string& weights) {
            if (records.cols() != 4) throw DomainError("records must have columns x, a1, a2, x_next");
            Dataset ds;
            for (int i = 0; i < records.rows(); ++i) {
                Record r{records(i, 0), records(i, 1), records(i, 2), records(i, 3)};
                if (r.x < 1 || r.x > kStates || r.x_next != next_state(r.a1, r.a2)) {
                    throw DomainError("invalid record at row " + std::to_string(i));
                }
                ds.records.push_back(r);
            }
            if (criterion != "pml" && criterion != "md") throw DomainError("criterion must be 'pml' or 'md'");
            const EstimationTrace tr = k_stage_estimate(
                ds, K, criterion == "pml" ? Criterion::Pml : Criterion::Md, schedule_from_name(weights), spec);
            if (tr.failed) throw DomainError(tr.failure);
            std::vector<Vec> alphas(tr.alpha_by_stage.begin(), tr.alpha_by_stage.end());
            return alphas;
        },
        py::arg("records"), py::arg("spec"), py::arg("K"), py::arg("criterion") = "pml",
        py::arg("weights") = "optimal", "Stage-by-stage estimates alpha_1..alpha_K");

    m.def(
        "sigma_kpml",
        [](const GameSpec& spec, int K) {
            const TruthPoint t = at_truth(spec);
            return sigma_kpml(t.d, t.cov, K);
        },
        py::arg("spec"), py::arg("K"));

    m.def(
        "sigma_kmd",
        [](const GameSpec& spec, int K, const std::string& weights) {
            const TruthPoint t = at_truth(spec);
            return sigma_kmd(t.d, t.cov, schedule_from_name(weights), K);
        },
        py::arg("spec"), py::arg("K"), py::arg("weights") = "optimal");

    m.def(
        "sigma_star",
        [](const GameSpec& spec) {
            const TruthPoint t = at_truth(spec);
            return sigma_star(t.d, t.cov);
        },
        py::arg("spec"));

    m.def(
        "variance_curve",
        [](const GameSpec& spec, int k_max) {
            const std::vector<CurveRow> rows = variance_curve(spec, k_max);
            Eigen::MatrixXd out(rows.size(), 5);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                out.row(i) << rows[i].K, rows[i].kpml_11, rows[i].kpml_22, rows[i].kmdopt_11, rows[i].kmdopt_22;
            }
            return out;
        },
        py::arg("spec"), py::arg("k_max"), "Columns K, kpml_11, kpml_22, kmdopt_11, kmdopt_22");

    m.def(
        "highorder_table",
        [](const GameSpec& spec, int S, std::size_t n, const std::vector<int>& k_list, std::uint64_t seed,
           int threads) {
            const std::vector<HighOrderRow> rows = highorder_table(spec, S, n, k_list, seed, threads);
            Eigen::MatrixXd out(rows.size(), 7);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                out.row(i) << rows[i].K, rows[i].bias[0], rows[i].var[0], rows[i].mse[0], rows[i].bias[1],
                    rows[i].var[1], rows[i].mse[1];
            }
            return out;
        },
        py::arg("spec"), py::arg("S"), py::arg("n"), py::arg("k_list"), py::arg("seed") = 0, py::arg("threads") = 1,
        "Columns K, bias_rn, var_rn, mse_rn, bias_ec, var_ec, mse_ec");
}
