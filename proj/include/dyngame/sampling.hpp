#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dyngame/game_model.hpp"

namespace dyngame {

struct Record {
    int x = 1;
    int a1 = 0;
    int a2 = 0;
    int x_next = 1;
};

struct Dataset {
    std::vector<Record> records;
    std::uint64_t seed = 0;
    std::size_t n() const { return records.size(); }
};

// Sufficient statistics of a dataset: state visits and entry counts per (j, x).
struct CellCounts {
    long n = 0;
    Eigen::Vector4d state_visits = Eigen::Vector4d::Zero();
    Vec entries = Vec::Zero(kDimP);  // number of a_j = 1 in state x, player-major
};

// Uniform draw in [0,1) determined only by (seed, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

// n i.i.d. records: x ~ m_star, a_j ~ Bernoulli(P_j(1|x)) independently.
// Each record depends only on (seed, record index).
Dataset draw_dataset(const Vec& p_star, const Vec& m_star, std::size_t n, std::uint64_t seed);

CellCounts cell_counts(const Dataset& ds);

// Frequency CCPs. Unvisited states give 0.5; other cells are clamped to [0.5/n, 1 - 0.5/n].
Vec frequency_ccp(const CellCounts& c);
Vec frequency_ccp(const Dataset& ds);

// Empirical state frequencies, floored at 0.5/n so that weights built from them stay PD.
Vec state_frequency(const CellCounts& c);

// Diagonal asymptotic covariance of the frequency CCPs and its closed-form inverse.
Mat omega_pp(const Vec& p, const Vec& m);
Mat omega_pp_inverse(const Vec& p, const Vec& m);

struct CovarianceBundle {
    Mat omega_pp, omega_p0, omega_pg, omega_00, omega_0g, omega_gg;
    int dim_p() const { return static_cast<int>(omega_pp.rows()); }
    int dim_g() const { return static_cast<int>(omega_gg.rows()); }
    // Full (2 d_P + d_g) square matrix of the stacked first-stage covariance.
    Mat stacked() const;
};

// P0 = P-hat with no nuisance parameter: every P block equals Omega_PP.
CovarianceBundle covariance_bundle(const Vec& p, const Vec& m);
// Caller-supplied blocks, checked for shape, symmetry and positive semidefiniteness.
CovarianceBundle covariance_bundle(const CovarianceBundle& custom);

void write_dataset_csv(const Dataset& ds, std::ostream& os);
Dataset read_dataset_csv(std::istream& is);

}  // namespace dyngame
