#include "dyngame/sampling.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace dyngame {

namespace {

// SplitMix64 finalizer; a bijective mixer on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_law(const Vec& m) {
    if (m.size() != kStates) throw DomainError("state law must have length 4");
    if (m.minCoeff() < 0.0 || std::abs(m.sum() - 1.0) > 1e-9) {
        throw DomainError("state law must be nonnegative and sum to one");
    }
}

void check_psd(const Mat& s, const char* what) {
    if (s.size() == 0) return;
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff())) {
        throw DomainError(std::string("covariance bundle: ") + what + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s), Eigen::EigenvaluesOnly);
    const double floor = -1e-8 * std::abs(s.trace());
    if (es.eigenvalues().minCoeff() < floor) {
        throw DomainError(std::string("covariance bundle: ") + what + " is not positive semidefinite");
    }
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t bits = mix64(mix64(seed) ^ mix64(counter + 0x9e3779b97f4a7c15ULL));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Dataset draw_dataset(const Vec& p_star, const Vec& m_star, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("draw_dataset: n must be positive");
    require_interior(p_star, "draw_dataset");
    check_law(m_star);
    Dataset ds;
    ds.seed = seed;
    ds.records.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t base = 3 * static_cast<std::uint64_t>(i);
        const double u_state = counter_uniform(seed, base);
        int x = kStates;
        double cum = 0.0;
        for (int s = 1; s <= kStates; ++s) {
            cum += m_star[s - 1];
            if (u_state < cum) {
                x = s;
                break;
            }
        }
        Record& r = ds.records[i];
        r.x = x;
        r.a1 = counter_uniform(seed, base + 1) < p_star[ccp_index(1, x)] ? 1 : 0;
        r.a2 = counter_uniform(seed, base + 2) < p_star[ccp_index(2, x)] ? 1 : 0;
        r.x_next = next_state(r.a1, r.a2);
    }
    return ds;
}

CellCounts cell_counts(const Dataset& ds) {
    CellCounts c;
    c.n = static_cast<long>(ds.n());
    for (const Record& r : ds.records) {
        c.state_visits[r.x - 1] += 1.0;
        c.entries[ccp_index(1, r.x)] += r.a1;
        c.entries[ccp_index(2, r.x)] += r.a2;
    }
    return c;
}

Vec frequency_ccp(const CellCounts& c) {
    Vec p(kDimP);
    const double eps = c.n > 0 ? 0.5 / static_cast<double>(c.n) : 0.5;
    for (int j = 1; j <= kPlayers; ++j) {
        for (int x = 1; x <= kStates; ++x) {
            const double visits = c.state_visits[x - 1];
            const int i = ccp_index(j, x);
            if (visits == 0.0) {
                p[i] = 0.5;
            } else {
                p[i] = std::clamp(c.entries[i] / visits, eps, 1.0 - eps);
            }
        }
    }
    return p;
}

Vec frequency_ccp(const Dataset& ds) { return frequency_ccp(cell_counts(ds)); }

Vec state_frequency(const CellCounts& c) {
    if (c.n <= 0) throw DomainError("state_frequency: empty dataset");
    const double n = static_cast<double>(c.n);
    Vec m = (c.state_visits / n).cwiseMax(0.5 / n);
    return m / m.sum();
}

Mat omega_pp(const Vec& p, const Vec& m) {
    require_interior(p, "omega_pp");
    if (m.size() != kStates || m.minCoeff() <= 0.0) throw DomainError("omega_pp: state law must be positive");
    Mat out = Mat::Zero(kDimP, kDimP);
    for (int j = 1; j <= kPlayers; ++j) {
        for (int x = 1; x <= kStates; ++x) {
            const int i = ccp_index(j, x);
            out(i, i) = p[i] * (1.0 - p[i]) / m[x - 1];
        }
    }
    return out;
}

Mat omega_pp_inverse(const Vec& p, const Vec& m) {
    require_interior(p, "omega_pp_inverse");
    if (m.size() != kStates || m.minCoeff() <= 0.0) throw DomainError("omega_pp_inverse: state law must be positive");
    Mat out = Mat::Zero(kDimP, kDimP);
    for (int j = 1; j <= kPlayers; ++j) {
        for (int x = 1; x <= kStates; ++x) {
            const int i = ccp_index(j, x);
            out(i, i) = m[x - 1] * (1.0 / p[i] + 1.0 / (1.0 - p[i]));
        }
    }
    return out;
}

Mat CovarianceBundle::stacked() const {
    const int dp = dim_p();
    const int dg = dim_g();
    Mat s(2 * dp + dg, 2 * dp + dg);
    s.block(0, 0, dp, dp) = omega_pp;
    s.block(0, dp, dp, dp) = omega_p0;
    s.block(dp, 0, dp, dp) = omega_p0.transpose();
    s.block(dp, dp, dp, dp) = omega_00;
    if (dg > 0) {
        s.block(0, 2 * dp, dp, dg) = omega_pg;
        s.block(2 * dp, 0, dg, dp) = omega_pg.transpose();
        s.block(dp, 2 * dp, dp, dg) = omega_0g;
        s.block(2 * dp, dp, dg, dp) = omega_0g.transpose();
        s.block(2 * dp, 2 * dp, dg, dg) = omega_gg;
    }
    return s;
}

CovarianceBundle covariance_bundle(const Vec& p, const Vec& m) {
    CovarianceBundle b;
    b.omega_pp = omega_pp(p, m);
    b.omega_p0 = b.omega_pp;
    b.omega_00 = b.omega_pp;
    b.omega_pg = Mat::Zero(kDimP, 0);
    b.omega_0g = Mat::Zero(kDimP, 0);
    b.omega_gg = Mat::Zero(0, 0);
    return b;
}

CovarianceBundle covariance_bundle(const CovarianceBundle& custom) {
    const long dp = custom.omega_pp.rows();
    const long dg = custom.omega_gg.rows();
    auto shape = [](const Mat& m, long r, long c, const char* what) {
        if (m.rows() != r || m.cols() != c) throw DomainError(std::string("covariance bundle: bad shape for ") + what);
    };
    shape(custom.omega_pp, dp, dp, "omega_pp");
    shape(custom.omega_p0, dp, dp, "omega_p0");
    shape(custom.omega_00, dp, dp, "omega_00");
    shape(custom.omega_pg, dp, dg, "omega_pg");
    shape(custom.omega_0g, dp, dg, "omega_0g");
    shape(custom.omega_gg, dg, dg, "omega_gg");
    check_psd(custom.omega_pp, "omega_pp");
    check_psd(custom.omega_00, "omega_00");
    check_psd(custom.omega_gg, "omega_gg");
    check_psd(custom.stacked(), "stacked covariance");
    return custom;
}

void write_dataset_csv(const Dataset& ds, std::ostream& os) {
    os << "i,x,a1,a2,x_next\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const Record& r = ds.records[i];
        os << i << ',' << r.x << ',' << r.a1 << ',' << r.a2 << ',' << r.x_next << '\n';
    }
}

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("i,x,a1,a2,x_next", 0) != 0) {
        throw DomainError("dataset CSV: expected header i,x,a1,a2,x_next");
    }
    Dataset ds;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        long i = 0;
        Record r;
        char c1, c2, c3, c4;
        if (!(ss >> i >> c1 >> r.x >> c2 >> r.a1 >> c3 >> r.a2 >> c4 >> r.x_next) || c1 != ',' || c2 != ',' ||
            c3 != ',' || c4 != ',') {
            throw DomainError("dataset CSV: malformed line " + std::to_string(lineno));
        }
        const bool ok = r.x >= 1 && r.x <= kStates && (r.a1 == 0 || r.a1 == 1) && (r.a2 == 0 || r.a2 == 1) &&
                        r.x_next == next_state(r.a1, r.a2);
        if (!ok) throw DomainError("dataset CSV: invalid record on line " + std::to_string(lineno));
        ds.records.push_back(r);
    }
    if (ds.records.empty()) throw DomainError("dataset CSV: no records");
    return ds;
}

}  // namespace dyngame
