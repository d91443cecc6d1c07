#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dyngame/equilibrium.hpp"
#include "dyngame/harness.hpp"
#include "test_helpers.hpp"

using namespace dyngame;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("dyngame_harness_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Runs the CLI with stdout and stderr redirected; returns the exit status.
int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = std::string("\"") + DYNGAME_CLI_PATH + "\" " + args + " > \"" + stdout_file.string() +
                            "\" 2> \"" + (stdout_file.string() + ".err") + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

McConfig small_config() {
    McConfig cfg;
    cfg.spec = design(1);
    cfg.n = 500;
    cfg.S = 40;
    cfg.k_list = {1, 3};
    cfg.estimators = {"kpml", "kmd-opt", "kmd-custom"};
    cfg.base_seed = 123456789;
    return cfg;
}

std::string report_csv(const McReport& r) {
    std::ostringstream os;
    write_mc_csv(r, os);
    return os.str();
}

}  // namespace

TEST_CASE("spec JSON round trip and validation") {
    const GameSpec s = spec_from_json_text(R"({"design": 2, "beta": 0.9})");
    CHECK(s.lambda_rn == 2.0);
    CHECK(s.beta == 0.9);
    const GameSpec back = spec_from_json_text(spec_to_json_text(design(3)));
    CHECK(back.lambda_rn == design(3).lambda_rn);
    CHECK(back.lambda_fc[1] == design(3).lambda_fc[1]);
    CHECK_THROWS_AS(spec_from_json_text(R"({"lambda_rn": 1.0})"), DomainError);
    CHECK_THROWS_AS(spec_from_json_text(R"({"design": 1, "beta": 1.5})"), DomainError);
    CHECK_THROWS_AS(spec_from_json_text("not json"), DomainError);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(config_from_json_text(R"({"design": 1, "S": 10, "k_list": [1, 2, 5]})"));
    CHECK_THROWS_AS(config_from_json_text(R"({"design": 1, "S": 0})"), DomainError);
    CHECK_THROWS_AS(config_from_json_text(R"({"design": 1, "k_list": [2, 1]})"), DomainError);
    CHECK_THROWS_AS(config_from_json_text(R"({"design": 1, "k_list": []})"), DomainError);
    CHECK_THROWS_AS(config_from_json_text(R"({"design": 1, "n": 0})"), DomainError);
    CHECK_THROWS_AS(config_from_json_text(R"({"design": 1, "estimators": ["nope"]})"), DomainError);
}

TEST_CASE("Monte Carlo report structure and sanity") {
    const McConfig cfg = small_config();
    const McReport r = run_monte_carlo(cfg);
    CHECK(r.rows.size() == 6);
    CHECK(r.asy_rows.size() == 6);
    for (const McRow& row : r.rows) {
        CHECK(row.failures == 0);
        CHECK(row.n == 500);
        for (int a = 0; a < kDimAlpha; ++a) CHECK(row.scaled_mse[a] >= row.scaled_var[a] - 1e-9);
    }
    CHECK(r.asy_rows[0].estimator == "kpml-asy");
    CHECK(r.asy_rows[0].scaled_var[0] == doctest::Approx(121.98).epsilon(0.005));
    const std::string csv = report_csv(r);
    CHECK(first_line(csv) == "estimator,n,K,var_rn,mse_rn,var_ec,mse_ec,failures");
}

TEST_CASE("single replication is degenerate") {
    McConfig cfg = small_config();
    cfg.S = 1;
    cfg.k_list = {1};
    cfg.estimators = {"kpml"};
    const McReport r = run_monte_carlo(cfg);
    REQUIRE(r.rows.size() == 1);
    const EquilibriumSolution eq = solve_equilibrium(cfg.spec);
    const Dataset ds = draw_dataset(eq.p_star, eq.m_star, cfg.n, cfg.base_seed ^ 1ULL);
    const EstimationTrace t = k_stage_estimate(ds, 1, Criterion::Pml, WeightSchedule::pml_equivalent(), cfg.spec);
    const Alpha dev = t.alpha_by_stage[0] - cfg.spec.alpha();
    for (int a = 0; a < kDimAlpha; ++a) {
        CHECK(r.rows[0].scaled_var[a] == 0.0);
        CHECK(r.rows[0].scaled_mse[a] == doctest::Approx(500.0 * dev[a] * dev[a]).epsilon(1e-12));
    }
}

TEST_CASE("reports are deterministic and thread-count invariant") {
    McConfig cfg = small_config();
    const std::string one = report_csv(run_monte_carlo(cfg));
    CHECK(report_csv(run_monte_carlo(cfg)) == one);
    cfg.threads = 8;
    CHECK(report_csv(run_monte_carlo(cfg)) == one);
    cfg.base_seed += 1;
    CHECK(report_csv(run_monte_carlo(cfg)) != one);
}

TEST_CASE("stage prefix property within a replication") {
    const McConfig cfg = small_config();
    const EquilibriumSolution eq = solve_equilibrium(cfg.spec);
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const Dataset ds = draw_dataset(eq.p_star, eq.m_star, 500, cfg.base_seed ^ s);
        for (const Criterion c : {Criterion::Pml, Criterion::Md}) {
            const WeightSchedule w =
                c == Criterion::Md ? WeightSchedule::optimal_each_stage() : WeightSchedule::pml_equivalent();
            const EstimationTrace one = k_stage_estimate(ds, 1, c, w, cfg.spec);
            const EstimationTrace five = k_stage_estimate(ds, 5, c, w, cfg.spec);
            CHECK(one.alpha_by_stage[0] == five.alpha_by_stage[0]);
        }
    }
}

TEST_CASE("empirical variance approaches the asymptotic value") {
    std::vector<double> gap500, gap2000;
    for (int i = 1; i <= 3; ++i) {
        for (const std::size_t n : {500UL, 2000UL}) {
            McConfig cfg;
            cfg.spec = design(i);
            cfg.n = n;
            cfg.S = 10000;
            cfg.k_list = {1};
            cfg.estimators = {"kpml"};
            cfg.base_seed = 0x9e3779b97f4a7c15ULL;
            const McReport r = run_monte_carlo(cfg);
            const double gap = std::abs(r.rows[0].scaled_var[0] - r.asy_rows[0].scaled_var[0]);
            (n == 500 ? gap500 : gap2000).push_back(gap);
        }
    }
    std::sort(gap500.begin(), gap500.end());
    std::sort(gap2000.begin(), gap2000.end());
    MESSAGE("median gap n=500 " << gap500[1] << ", n=2000 " << gap2000[1]);
    CHECK(gap2000[1] <= gap500[1]);
}

TEST_CASE("variance curve") {
    const std::vector<CurveRow> c1 = variance_curve(design(1), 20);
    REQUIRE(c1.size() == 20);
    CHECK(c1[0].kpml_11 == doctest::Approx(121.98).epsilon(0.005));
    CHECK(c1[19].kpml_11 == doctest::Approx(99.21).epsilon(0.005));
    const std::vector<CurveRow> c2 = variance_curve(design(2), 20);
    for (const CurveRow& r : c2) CHECK(r.kmdopt_11 == doctest::Approx(82.49).epsilon(0.005));
    const std::vector<CurveRow> c3 = variance_curve(design(3), 5);
    const std::vector<double> wiggle{90.42, 89.58, 90.32, 90.08, 89.94};
    for (int k = 0; k < 5; ++k) CHECK(c3[k].kpml_11 == doctest::Approx(wiggle[k]).epsilon(0.005));
    std::ostringstream os;
    write_curve_csv(c1, os);
    CHECK(first_line(os.str()) == "K,kpml_11,kpml_22,kmdopt_11,kmdopt_22");
    CHECK_THROWS_AS(variance_curve(design(1), 0), DomainError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(121.98205770001) == "121.9820577");
    CHECK(format_number(-3.0) == "-3");
}

TEST_CASE("CLI subcommands and exit codes") {
    const fs::path dir = scratch_dir();
    write_text(dir / "design1.json", R"({"design": 1, "n": 300, "S": 20, "k_list": [1, 2], "base_seed": 77})");
    const std::string cfg = "--config \"" + (dir / "design1.json").string() + "\"";

    CHECK(run_cli(cfg + " --out \"" + (dir / "t1.csv").string() + "\" mc", dir / "mc.stdout") == 0);
    CHECK(first_line(slurp(dir / "t1.csv")) == "estimator,n,K,var_rn,mse_rn,var_ec,mse_ec,failures");
    CHECK(run_cli(cfg + " --out \"" + (dir / "t1b.csv").string() + "\" --threads 4 mc", dir / "mc2.stdout") == 0);
    CHECK(slurp(dir / "t1.csv") == slurp(dir / "t1b.csv"));

    CHECK(run_cli(cfg + " curve", dir / "curve.csv") == 0);
    const std::string curve = slurp(dir / "curve.csv");
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 21);

    CHECK(run_cli(cfg + " solve", dir / "solve.json") == 0);
    CHECK(slurp(dir / "solve.json").find("\"p_star\"") != std::string::npos);

    CHECK(run_cli(cfg + " --seed 5 simulate --n 400", dir / "data.csv") == 0);
    CHECK(run_cli(cfg + " --seed 5 simulate --n 400", dir / "data2.csv") == 0);
    CHECK(slurp(dir / "data.csv") == slurp(dir / "data2.csv"));
    CHECK(first_line(slurp(dir / "data.csv")) == "i,x,a1,a2,x_next");

    const std::string data = "--data \"" + (dir / "data.csv").string() + "\"";
    CHECK(run_cli(cfg + " estimate " + data + " --criterion md --K 3", dir / "est.json") == 0);
    CHECK(slurp(dir / "est.json").find("\"pilot_alpha\"") != std::string::npos);
    CHECK(run_cli(cfg + " estimate " + data + " --criterion pml --K 2", dir / "est2.json") == 0);

    write_text(dir / "ho.json", R"({"design": 1, "n": 500, "S": 50, "k_list": [1, 5]})");
    CHECK(run_cli("--config \"" + (dir / "ho.json").string() + "\" highorder", dir / "ho.csv") == 0);
    CHECK(first_line(slurp(dir / "ho.csv")) == "K,bias_rn,var_rn,mse_rn,bias_ec,var_ec,mse_ec");

    // Usage errors.
    CHECK(run_cli("", dir / "none.out") == 2);
    CHECK(run_cli("mc --bogus", dir / "bogus.out") == 2);
    CHECK(run_cli("frobnicate", dir / "unknown.out") == 2);
    CHECK(run_cli("estimate", dir / "nodata.out") == 2);
    CHECK(run_cli("--threads 0 mc", dir / "threads.out") == 2);
    CHECK(run_cli("--help", dir / "help.out") == 0);

    // Domain errors.
    write_text(dir / "bad.json", R"({"design": 1, "beta": 2.0})");
    CHECK(run_cli("--config \"" + (dir / "bad.json").string() + "\" solve", dir / "bad.out") == 1);
    CHECK(run_cli("--config \"" + (dir / "missing.json").string() + "\" solve", dir / "missing.out") == 1);
    write_text(dir / "broken.csv", "i,x,a1,a2,x_next\n0,1,1,1,2\n");
    CHECK(run_cli("estimate --data \"" + (dir / "broken.csv").string() + "\"", dir / "broken.out") == 1);

    fs::remove_all(dir);
}
