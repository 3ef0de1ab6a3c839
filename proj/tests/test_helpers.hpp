#pragma once

#include <Eigen/Dense>

#include "paygap/estimators.hpp"

namespace testutil {

using namespace paygap;

// Builds a Dataset from parallel vectors; covariates attached separately.
inline Dataset make_dataset(std::vector<int> group, std::vector<double> outcome,
                            std::vector<double> weight = {}) {
    Dataset d;
    d.group = std::move(group);
    d.outcome = std::move(outcome);
    d.weight = weight.empty() ? std::vector<double>(d.group.size(), 1.0) : std::move(weight);
    return d;
}

inline void add_categorical(Dataset& d, const std::string& name, std::vector<int> codes,
                            std::vector<std::string> levels) {
    Covariate c;
    c.name = name;
    c.type = ColumnType::Categorical;
    c.codes = std::move(codes);
    c.levels = std::move(levels);
    d.covariates.push_back(std::move(c));
}

inline void add_continuous(Dataset& d, const std::string& name, std::vector<double> values) {
    Covariate c;
    c.name = name;
    c.type = ColumnType::Continuous;
    c.values = std::move(values);
    d.covariates.push_back(std::move(c));
}

inline DesignMatrix make_design(const std::vector<std::vector<double>>& cols,
                                const std::vector<std::string>& names) {
    DesignMatrix X;
    X.names = names;
    X.values.resize(static_cast<Eigen::Index>(cols.empty() ? 0 : cols[0].size()),
                    static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < cols[j].size(); ++i)
            X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    return X;
}

inline Eigen::VectorXd vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Textbook closed form (A'WA)^{-1} A'Wy with A = [1 X], via explicit inverse.
// Only intended for small full-rank problems.
inline Eigen::VectorXd wls_closed_form(const DesignMatrix& X, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w) {
    const Eigen::Index n = y.size(), p = X.values.cols();
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    if (p > 0) A.rightCols(p) = X.values;
    Eigen::MatrixXd M = A.transpose() * w.asDiagonal() * A;
    return M.fullPivLu().inverse() * (A.transpose() * w.cwiseProduct(y));
}

// Brute-force weighted cell-mean gap: the exact-matching oracle.
// key[i] identifies the cell of row i; all focal rows must have a reference
// row in their cell.
inline double cell_mean_gap_oracle(const Dataset& d, const std::vector<int>& key) {
    std::map<int, std::pair<double, double>> men;  // cell -> (w, wy)
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (d.group[i] == 0) {
            men[key[i]].first += d.weight[i];
            men[key[i]].second += d.weight[i] * d.outcome[i];
        }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.group[i] != 1) continue;
        const auto& m = men.at(key[i]);
        num += d.weight[i] * (d.outcome[i] - m.second / m.first);
        den += d.weight[i];
    }
    return num / den;
}

inline double weighted_mean_of(const Dataset& d, int group) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (d.group[i] == group) {
            num += d.weight[i] * d.outcome[i];
            den += d.weight[i];
        }
    return num / den;
}

inline double raw_gap_of(const Dataset& d) {
    return weighted_mean_of(d, 1) - weighted_mean_of(d, 0);
}

// One categorical covariate, both groups present in every cell; weights drawn
// continuous so saturated propensities are distinct across cells.
inline Dataset random_cell_dataset(Rng& rng, std::size_t n, int n_levels, double noise_sd,
                                   bool homogeneous_gap = false, double gap = -0.3) {
    std::vector<double> mu(static_cast<std::size_t>(n_levels)), share(static_cast<std::size_t>(n_levels));
    for (int l = 0; l < n_levels; ++l) {
        mu[static_cast<std::size_t>(l)] = 2.0 * rng.uniform() - 1.0;
        share[static_cast<std::size_t>(l)] = 0.25 + 0.5 * rng.uniform();
    }
    Dataset d;
    std::vector<int> codes;
    std::vector<std::string> levels;
    for (int l = 0; l < n_levels; ++l) levels.push_back("L" + std::to_string(l));
    for (std::size_t i = 0; i < n; ++i) {
        int lvl = static_cast<int>(rng.below(static_cast<std::size_t>(n_levels)));
        // Force both groups into every cell for the first 2*n_levels rows.
        int g;
        if (i < 2 * static_cast<std::size_t>(n_levels)) {
            lvl = static_cast<int>(i / 2);
            g = static_cast<int>(i % 2);
        } else {
            g = rng.uniform() < share[static_cast<std::size_t>(lvl)] ? 1 : 0;
        }
        double y = mu[static_cast<std::size_t>(lvl)] + (g ? gap : 0.0) +
                   noise_sd * rng.normal();
        if (!homogeneous_gap && g) y += 0.2 * mu[static_cast<std::size_t>(lvl)];
        d.group.push_back(g);
        d.outcome.push_back(y);
        d.weight.push_back(0.5 + rng.uniform());
        codes.push_back(lvl);
    }
    add_categorical(d, "cell", codes, levels);
    return d;
}

inline EstimationContext basic_context(std::uint64_t seed = 7) {
    EstimationContext ctx;
    ctx.baseline.regime = Regime::Baseline;
    ctx.baseline.terms = {Term::dummy("cell")};
    ctx.full.regime = Regime::Full;
    ctx.full.terms = {Term::dummy("cell")};
    ctx.seed = seed;
    return ctx;
}

}  // namespace testutil
