#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dyngame/estimation.hpp"
#include "dyngame/highorder.hpp"

namespace dyngame {

// Game parameters from a JSON object with keys lambda_rn, lambda_ec, lambda_rs,
// lambda_fc1, lambda_fc2, beta. An optional "design" key (1..3) supplies
// defaults that the other keys override.
GameSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const GameSpec& spec);

struct McConfig {
    GameSpec spec = design(1);
    std::size_t n = 500;
    int S = 1000;
    std::vector<int> k_list{1};
    std::vector<std::string> estimators{"kpml", "kmd-opt"};
    std::uint64_t base_seed = 0;
    std::vector<Mat> custom_weights;  // kmd-custom schedule; identity when empty
    int k_max = 20;                   // curve length
    int threads = 1;

    void validate() const;
};

McConfig config_from_json_text(const std::string& text);

struct McRow {
    std::string estimator;
    std::size_t n = 0;
    int K = 0;
    Vec scaled_var, scaled_mse;  // per alpha coordinate
    int failures = 0;
};

struct McReport {
    std::vector<McRow> rows;        // Monte Carlo moments
    std::vector<McRow> asy_rows;    // asymptotic variances at the true parameters
};

McReport run_monte_carlo(const McConfig& cfg);
void write_mc_csv(const McReport& report, std::ostream& os);

struct CurveRow {
    int K = 0;
    double kpml_11 = 0, kpml_22 = 0, kmdopt_11 = 0, kmdopt_22 = 0;
};
std::vector<CurveRow> variance_curve(const GameSpec& spec, int k_max);
void write_curve_csv(const std::vector<CurveRow>& rows, std::ostream& os);

void write_highorder_csv(const std::vector<HighOrderRow>& rows, std::ostream& os);

// Compact, locale-independent number formatting shared by every CSV/JSON writer.
std::string format_number(double v);

}  // namespace dyngame
