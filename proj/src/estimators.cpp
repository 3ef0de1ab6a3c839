#include "paygap/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "paygap/inference.hpp"

namespace paygap {

std::string estimator_name(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::LRM: return "lrm";
        case EstimatorKind::BO: return "bo";
        case EstimatorKind::IPW: return "ipw";
        case EstimatorKind::AIPW: return "aipw";
        case EstimatorKind::EXM: return "exm";
        case EstimatorKind::PSM: return "psm";
        case EstimatorKind::EXPSM: return "expsm";
        case EstimatorKind::PDS: return "pds";
    }
    return "?";
}

EstimatorKind parse_estimator(const std::string& s) {
    if (s == "lrm") return EstimatorKind::LRM;
    if (s == "bo") return EstimatorKind::BO;
    if (s == "ipw") return EstimatorKind::IPW;
    if (s == "aipw") return EstimatorKind::AIPW;
    if (s == "exm") return EstimatorKind::EXM;
    if (s == "psm") return EstimatorKind::PSM;
    if (s == "expsm") return EstimatorKind::EXPSM;
    if (s == "pds") return EstimatorKind::PDS;
    throw validation_error("unknown estimator '" + s + "'");
}

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd group_vector(const Dataset& data) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(data.n_rows()));
    for (std::size_t i = 0; i < data.n_rows(); ++i) g(static_cast<Eigen::Index>(i)) = data.group[i];
    return g;
}

double focal_weighted_mean_outcome(const Dataset& data) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        if (data.group[i] != 1) continue;
        num += data.weight[i] * data.outcome[i];
        den += data.weight[i];
    }
    if (den <= 0.0) throw std::runtime_error("no focal-group rows");
    return num / den;
}

long count_group(const Dataset& data, int g) {
    long n = 0;
    for (int gi : data.group) n += gi == g;
    return n;
}

// Design column holding the focal-group dummy in pooled regressions.
std::string group_column_name(const DesignMatrix& X) {
    std::string name = "__group__";
    while (X.column_index(name) >= 0) name += "_";
    return name;
}

DesignMatrix prepend_group(const DesignMatrix& X, const Eigen::VectorXd& g,
                           const std::string& name) {
    DesignMatrix out;
    out.values.resize(g.size(), X.values.cols() + 1);
    out.values.col(0) = g;
    if (X.values.cols() > 0) out.values.rightCols(X.values.cols()) = X.values;
    out.names.push_back(name);
    out.names.insert(out.names.end(), X.names.begin(), X.names.end());
    return out;
}

}  // namespace

// ------------------------------------------------------- nuisance models

Eigen::VectorXd WageModel::predict_on(const Dataset& data) const {
    return predict(fit, builder->transform(data));
}

WageModel fit_wage_model(const Dataset& fit_rows, const EstimationContext& ctx, Regime regime,
                         std::uint64_t seed) {
    WageModel model;
    model.builder = std::make_shared<DesignBuilder>(ctx.spec_for(regime), ctx.blocks);
    DesignMatrix X = model.builder->fit_transform(fit_rows);
    Eigen::VectorXd y = to_vector(fit_rows.outcome), w = to_vector(fit_rows.weight);
    if (regime != Regime::ML) {
        model.fit = fit_wls(X, y, w);
        return model;
    }
    if (ctx.frozen_wage_lambda) {
        model.lambda_used = *ctx.frozen_wage_lambda;
        FitResult penalized = fit_lasso_at(X, y, w, Family::Gaussian, model.lambda_used);
        std::vector<std::string> support;
        for (const auto& [name, coef] : penalized.coefficients)
            if (coef != 0.0) support.push_back(name);
        model.n_selected = static_cast<int>(support.size());
        model.fit = fit_wls(select_columns(X, support), y, w);
        return model;
    }
    LassoPath path = fit_lasso_path(X, y, w, Family::Gaussian, ctx.lasso, seed);
    model.lambda_used = path.lambda_1se();
    model.n_selected = static_cast<int>(path.support_at(path.idx_1se).size());
    model.fit = post_lasso_refit(path, LambdaChoice::OneSE, X, y, w);
    return model;
}

Eigen::VectorXd PropensityModel::predict_on(const Dataset& data) const {
    return predict(fit, builder->transform(data));
}

PropensityModel fit_propensity_model(const Dataset& data, const EstimationContext& ctx,
                                     Regime regime, std::uint64_t seed) {
    PropensityModel model;
    model.builder = std::make_shared<DesignBuilder>(ctx.spec_for(regime), ctx.blocks);
    DesignMatrix X = model.builder->fit_transform(data);
    Eigen::VectorXd g = group_vector(data), w = to_vector(data.weight);
    if (regime != Regime::ML) {
        model.fit = fit_logit(X, g, w);
        model.flagged = model.fit.flagged;
        return model;
    }
    if (ctx.frozen_prop_lambda) {
        model.lambda_used = *ctx.frozen_prop_lambda;
        model.fit = fit_lasso_at(X, g, w, Family::Binomial, model.lambda_used);
        model.n_selected = static_cast<int>(model.fit.coefficients.size());
        return model;
    }
    LassoPath path = fit_lasso_path(X, g, w, Family::Binomial, ctx.lasso, seed);
    model.lambda_used = path.lambda_1se();
    model.n_selected = static_cast<int>(path.support_at(path.idx_1se).size());
    model.fit = path.fit_at(path.idx_1se);
    model.fit.n_obs = static_cast<long>(data.n_rows());
    return model;
}

// ------------------------------------------------------------------- LRM

GapEstimate estimate_lrm(const Dataset& data, const EstimationContext& ctx, Regime regime) {
    if (regime == Regime::ML)
        throw std::invalid_argument("LRM has no ML regime; the grid maps it to PDS");
    GapEstimate est;
    est.estimator = EstimatorKind::LRM;
    est.regime = regime;
    DesignMatrix X;
    const ModelSpec& spec = ctx.spec_for(regime);
    if (!spec.terms.empty()) {
        X = build_design(data, spec, ctx.blocks);
    } else {
        X.values.resize(static_cast<Eigen::Index>(data.n_rows()), 0);
    }
    std::string gname = group_column_name(X);
    DesignMatrix XG = prepend_group(X, group_vector(data), gname);
    FitResult fit = fit_wls(XG, to_vector(data.outcome), to_vector(data.weight));
    est.delta_hat = fit.coefficients.at(gname);
    est.n_women_used = count_group(data, 1);
    est.n_men_used = count_group(data, 0);
    est.diagnostics["r2"] = fit.r2_or_loglik;
    return est;
}

// -------------------------------------------------------------------- BO

namespace {

// Kline-style implicit weights of the linear counterfactual: the BO estimate
// equals ybar_focal minus an implicit weighted mean of reference outcomes;
// negative weights signal extrapolation risk.
long count_negative_implicit_weights(const DesignMatrix& men_X, const Eigen::VectorXd& men_w,
                                     const DesignMatrix& women_X,
                                     const Eigen::VectorXd& women_w) {
    const Eigen::Index p = men_X.values.cols();
    Eigen::MatrixXd A(men_X.values.rows(), p + 1);
    A.col(0).setOnes();
    if (p > 0) A.rightCols(p) = men_X.values;
    Eigen::MatrixXd M = A.transpose() * men_w.asDiagonal() * A;
    Eigen::VectorXd xbar1(p + 1);
    xbar1(0) = 1.0;
    double sw1 = women_w.sum();
    for (Eigen::Index j = 0; j < p; ++j)
        xbar1(j + 1) = women_X.values.col(j).dot(women_w) / sw1;
    Eigen::VectorXd t = M.ldlt().solve(xbar1);
    Eigen::VectorXd iw = men_w.cwiseProduct(A * t);
    long negatives = 0;
    for (Eigen::Index i = 0; i < iw.size(); ++i) negatives += iw(i) < 0.0;
    return negatives;
}

}  // namespace

GapEstimate estimate_bo(const Dataset& data, const EstimationContext& ctx, Regime regime) {
    GapEstimate est;
    est.estimator = EstimatorKind::BO;
    est.regime = regime;
    Dataset men = data.subset(data.rows_of_group(0));
    Dataset women = data.subset(data.rows_of_group(1));
    if (men.n_rows() < 2 || women.n_rows() < 1)
        throw std::runtime_error("bo: needs reference-group rows to fit and focal rows to average");

    WageModel model = fit_wage_model(men, ctx, regime, mix_seed(ctx.seed, 0xb0));
    Eigen::VectorXd mu = model.predict_on(women);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < women.n_rows(); ++i) {
        num += women.weight[i] * (women.outcome[i] - mu(static_cast<Eigen::Index>(i)));
        den += women.weight[i];
    }
    est.delta_hat = num / den;
    est.n_women_used = static_cast<long>(women.n_rows());
    est.n_men_used = static_cast<long>(men.n_rows());
    if (!std::isnan(model.lambda_used)) {
        est.diagnostics["wage_lambda"] = model.lambda_used;
        est.diagnostics["wage_selected"] = model.n_selected;
    }
    // Implicit-weight diagnostic on the columns the fit actually uses.
    std::vector<std::string> used;
    for (const auto& [name, coef] : model.fit.coefficients) used.push_back(name);
    DesignMatrix men_X = select_columns(model.builder->transform(men), used);
    DesignMatrix women_X = select_columns(model.builder->transform(women), used);
    est.diagnostics["negative_implicit_weights"] = static_cast<double>(
        count_negative_implicit_weights(men_X, to_vector(men.weight), women_X,
                                        to_vector(women.weight)));
    return est;
}

// ------------------------------------------------------------------- IPW

IpwParts ipw_from_propensity(const Dataset& data, const Eigen::VectorXd& phat,
                             double trim_quantile) {
    if (static_cast<std::size_t>(phat.size()) != data.n_rows())
        throw std::invalid_argument("ipw: propensity vector misaligned");
    std::vector<double> odds, odds_w, ys;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        if (data.group[i] != 0) continue;
        double p = phat(static_cast<Eigen::Index>(i));
        odds.push_back(p / (1.0 - p) * data.weight[i]);
        odds_w.push_back(data.weight[i]);
        ys.push_back(data.outcome[i]);
    }
    if (odds.empty()) throw std::runtime_error("ipw: no reference-group rows");
    double cut = weighted_quantile(odds, odds_w, trim_quantile);
    IpwParts parts;
    double denom = 0.0;
    for (std::size_t k = 0; k < odds.size(); ++k) {
        if (odds[k] > cut) {
            ++parts.n_trimmed;
            continue;
        }
        denom += odds[k];
    }
    if (denom <= 0.0) throw std::runtime_error("ipw: all reference-group rows trimmed");
    double counterfactual = 0.0;
    for (std::size_t k = 0; k < odds.size(); ++k) {
        if (odds[k] > cut) continue;
        counterfactual += odds[k] / denom * ys[k];
        parts.weight_sum += odds[k] / denom;
    }
    parts.delta = focal_weighted_mean_outcome(data) - counterfactual;
    return parts;
}

GapEstimate estimate_ipw(const Dataset& data, const EstimationContext& ctx, Regime regime) {
    GapEstimate est;
    est.estimator = EstimatorKind::IPW;
    est.regime = regime;
    PropensityModel model = fit_propensity_model(data, ctx, regime, mix_seed(ctx.seed, 0x9599));
    Eigen::VectorXd phat = model.predict_on(data);
    IpwParts parts = ipw_from_propensity(data, phat, ctx.trim_quantile);
    est.delta_hat = parts.delta;
    est.n_trimmed = parts.n_trimmed;
    est.n_women_used = count_group(data, 1);
    est.n_men_used = count_group(data, 0) - parts.n_trimmed;
    est.diagnostics["ipw_weight_sum"] = parts.weight_sum;
    long extreme = 0;
    double pmax = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        if (data.group[i] != 0) continue;
        double p = phat(static_cast<Eigen::Index>(i));
        extreme += p > 0.99;
        pmax = std::max(pmax, p);
    }
    est.diagnostics["n_propensity_extreme"] = static_cast<double>(extreme);
    est.diagnostics["max_propensity_reference"] = pmax;
    if (model.flagged) est.diagnostics["propensity_flagged"] = 1.0;
    if (!std::isnan(model.lambda_used)) {
        est.diagnostics["prop_lambda"] = model.lambda_used;
        est.diagnostics["prop_selected"] = model.n_selected;
    }
    return est;
}

// ------------------------------------------------------------------ AIPW

double aipw_from_nuisances(const Dataset& data, const Eigen::VectorXd& mu0,
                           const Eigen::VectorXd& phat, double trim_quantile,
                           double* correction) {
    if (static_cast<std::size_t>(mu0.size()) != data.n_rows() ||
        static_cast<std::size_t>(phat.size()) != data.n_rows())
        throw std::invalid_argument("aipw: nuisance vectors misaligned");
    Dataset residual = data;
    for (std::size_t i = 0; i < data.n_rows(); ++i)
        residual.outcome[i] = data.outcome[i] - mu0(static_cast<Eigen::Index>(i));
    // The first term is the BO average of focal residuals; the second is the
    // IPW-reweighted reference residual, which re-uses the trimming and
    // normalization machinery.
    double term1 = focal_weighted_mean_outcome(residual);
    IpwParts parts = ipw_from_propensity(residual, phat, trim_quantile);
    double term2 = term1 - parts.delta;  // reweighted reference-group residual mean
    if (correction) *correction = term2;
    return term1 - term2;
}

namespace {

struct SplitHalves {
    std::vector<std::size_t> a, b;
};

// Equal-size split stratified by group so both halves can fit both nuisances.
SplitHalves stratified_halves(const Dataset& data, std::uint64_t seed) {
    SplitHalves halves;
    Rng rng(seed);
    for (int g : {1, 0}) {
        std::vector<std::size_t> idx = data.rows_of_group(g);
        rng.shuffle(idx);
        std::size_t half = idx.size() / 2;
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < half ? halves.a : halves.b).push_back(idx[k]);
    }
    std::sort(halves.a.begin(), halves.a.end());
    std::sort(halves.b.begin(), halves.b.end());
    return halves;
}

}  // namespace

GapEstimate estimate_aipw(const Dataset& data, const EstimationContext& ctx, Regime regime) {
    GapEstimate est;
    est.estimator = EstimatorKind::AIPW;
    est.regime = regime;
    if (ctx.aipw_folds != 1 && ctx.aipw_folds != 2)
        throw std::invalid_argument("aipw: folds must be 1 or 2");

    auto evaluate = [&](const Dataset& train, const Dataset& eval, std::uint64_t seed,
                        double& correction) {
        Dataset train_men = train.subset(train.rows_of_group(0));
        WageModel wage = fit_wage_model(train_men, ctx, regime, mix_seed(seed, 0xa1));
        PropensityModel prop = fit_propensity_model(train, ctx, regime, mix_seed(seed, 0xa2));
        if (est.diagnostics.find("wage_lambda") == est.diagnostics.end() &&
            !std::isnan(wage.lambda_used)) {
            est.diagnostics["wage_lambda"] = wage.lambda_used;
            est.diagnostics["prop_lambda"] = prop.lambda_used;
        }
        Eigen::VectorXd mu = wage.predict_on(eval);
        Eigen::VectorXd ph = prop.predict_on(eval);
        Dataset residual = eval;
        for (std::size_t i = 0; i < eval.n_rows(); ++i)
            residual.outcome[i] = eval.outcome[i] - mu(static_cast<Eigen::Index>(i));
        IpwParts parts = ipw_from_propensity(residual, ph, ctx.trim_quantile);
        est.n_trimmed += parts.n_trimmed;
        double term1 = focal_weighted_mean_outcome(residual);
        correction = term1 - parts.delta;
        return parts.delta;
    };

    if (ctx.aipw_folds == 1) {
        double corr = 0.0;
        est.delta_hat = evaluate(data, data, mix_seed(ctx.seed, 0xcf, 0), corr);
        est.diagnostics["correction"] = corr;
    } else {
        SplitHalves halves = stratified_halves(data, mix_seed(ctx.seed, 0x5b11));
        if (halves.a.empty() || halves.b.empty())
            throw std::runtime_error("aipw: sample too small to cross-fit");
        Dataset part_a = data.subset(halves.a), part_b = data.subset(halves.b);
        double corr_a = 0.0, corr_b = 0.0;
        double delta_b = evaluate(part_a, part_b, mix_seed(ctx.seed, 0xcf, 1), corr_b);
        double delta_a = evaluate(part_b, part_a, mix_seed(ctx.seed, 0xcf, 2), corr_a);
        est.delta_hat = 0.5 * (delta_a + delta_b);
        est.diagnostics["correction"] = 0.5 * (corr_a + corr_b);
    }
    est.n_women_used = count_group(data, 1);
    est.n_men_used = count_group(data, 0) - est.n_trimmed;
    return est;
}

// ------------------------------------------------------------------- EXM

GapEstimate exact_match(const Dataset& data, const CellIndex& cells) {
    GapEstimate est;
    est.estimator = EstimatorKind::EXM;
    long off_support = 0;
    for (std::size_t i = 0; i < data.n_rows(); ++i)
        if (data.group[i] == 1 && !cells.on_support[i]) ++off_support;
    if (off_support > 0)
        throw std::runtime_error("exact matching cannot extrapolate: " +
                                 std::to_string(off_support) +
                                 " focal rows lie in cells without reference-group weight");
    est.delta_hat = exm_gap_on_support(data, cells);
    long singles = 0;
    for (const auto& c : cells.cells) {
        if (c.n1 > 0 && c.n0 == 1) ++singles;
    }
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const CellStats& c = cells.cells[static_cast<std::size_t>(cells.cell_of_row[i])];
        if (data.group[i] == 1)
            ++est.n_women_used;
        else if (c.n1 > 0)
            ++est.n_men_used;  // reference rows in cells that actually match someone
    }
    est.diagnostics["n_single_reference_cells"] = static_cast<double>(singles);
    est.diagnostics["n_cells"] = static_cast<double>(cells.n_cells());
    return est;
}

// ------------------------------------------------------------- PSM/EXPSM

// Radius matching on the propensity score within exact cells. The radius is
// the weighted radius_quantile of each focal row's closest distance, pooled
// over all cells; focal rows without a reference row in their cell or within
// the radius are dropped and counted.
RadiusMatchSummary radius_match_on_propensity(const Dataset& data,
                                              const std::vector<int>& cell_of_row,
                                              std::size_t n_cells, const Eigen::VectorXd& phat,
                                              double radius_quantile) {
    struct ManEntry {
        double p, w, wy;
    };
    std::vector<std::vector<ManEntry>> men(n_cells);
    std::vector<std::vector<std::size_t>> women(n_cells);
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        auto c = static_cast<std::size_t>(cell_of_row[i]);
        if (data.group[i] == 0)
            men[c].push_back({phat(static_cast<Eigen::Index>(i)), data.weight[i],
                              data.weight[i] * data.outcome[i]});
        else
            women[c].push_back(i);
    }
    std::vector<std::vector<double>> pw(n_cells), pwy(n_cells);  // prefix sums over sorted men
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::sort(men[c].begin(), men[c].end(),
                  [](const ManEntry& a, const ManEntry& b) { return a.p < b.p; });
        pw[c].resize(men[c].size() + 1, 0.0);
        pwy[c].resize(men[c].size() + 1, 0.0);
        for (std::size_t k = 0; k < men[c].size(); ++k) {
            pw[c][k + 1] = pw[c][k] + men[c][k].w;
            pwy[c][k + 1] = pwy[c][k] + men[c][k].wy;
        }
    }

    auto closest = [&](std::size_t c, double p) {
        const auto& m = men[c];
        auto it = std::lower_bound(m.begin(), m.end(), p, [](const ManEntry& e, double v) {
            return e.p < v;
        });
        double best = std::numeric_limits<double>::infinity();
        if (it != m.end()) best = std::min(best, std::abs(it->p - p));
        if (it != m.begin()) best = std::min(best, std::abs(std::prev(it)->p - p));
        return best;
    };

    RadiusMatchSummary out;
    std::vector<double> dists, dist_w;
    std::vector<std::pair<std::size_t, double>> candidates;  // (row, closest distance)
    for (std::size_t c = 0; c < n_cells; ++c) {
        for (std::size_t i : women[c]) {
            if (men[c].empty()) {
                ++out.n_unmatched;  // no reference rows share the exact cell
                continue;
            }
            double d = closest(c, phat(static_cast<Eigen::Index>(i)));
            candidates.emplace_back(i, d);
            dists.push_back(d);
            dist_w.push_back(data.weight[i]);
        }
    }
    if (candidates.empty()) throw std::runtime_error("radius matching: no matchable focal rows");
    out.radius = weighted_quantile(dists, dist_w, radius_quantile);
    double pmin = phat.minCoeff(), pmax = phat.maxCoeff();
    out.degenerate = (pmax - pmin) < 1e-12;

    const double slack = 1e-12;
    double num = 0.0, den = 0.0;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> used_ranges(n_cells);
    for (auto& [i, d] : candidates) {
        if (d > out.radius) {
            ++out.n_unmatched;
            continue;
        }
        auto c = static_cast<std::size_t>(cell_of_row[i]);
        double p = phat(static_cast<Eigen::Index>(i));
        const auto& m = men[c];
        auto lo = std::lower_bound(m.begin(), m.end(), p - out.radius - slack,
                                   [](const ManEntry& e, double v) { return e.p < v; });
        auto hi = std::upper_bound(m.begin(), m.end(), p + out.radius + slack,
                                   [](double v, const ManEntry& e) { return v < e.p; });
        auto a = static_cast<std::size_t>(lo - m.begin());
        auto b = static_cast<std::size_t>(hi - m.begin());
        if (a >= b) {
            ++out.n_unmatched;
            continue;
        }
        double wsum = pw[c][b] - pw[c][a];
        double wysum = pwy[c][b] - pwy[c][a];
        num += data.weight[i] * (data.outcome[i] - wysum / wsum);
        den += data.weight[i];
        ++out.n_matched;
        used_ranges[c].emplace_back(a, b);
    }
    if (den <= 0.0) throw std::runtime_error("radius matching: every focal row unmatched");
    out.delta = num / den;
    // Count distinct reference rows inside at least one matched range.
    for (std::size_t c = 0; c < n_cells; ++c) {
        auto& ranges = used_ranges[c];
        if (ranges.empty()) continue;
        std::sort(ranges.begin(), ranges.end());
        std::size_t covered_to = 0;
        for (auto& [a, b] : ranges) {
            std::size_t from = std::max(a, covered_to);
            if (b > from) out.n_men_used += static_cast<long>(b - from);
            covered_to = std::max(covered_to, b);
        }
    }
    return out;
}

namespace {

void fill_from_radius_match(GapEstimate& est, const RadiusMatchSummary& out,
                            const Dataset& data) {
    est.delta_hat = out.delta;
    est.n_unmatched = out.n_unmatched;
    est.n_women_used = out.n_matched;
    est.n_men_used = out.n_men_used;
    est.diagnostics["radius"] = out.radius;
    if (out.degenerate) est.diagnostics["degenerate_propensity"] = 1.0;
    (void)data;
}

std::vector<VariableBlock> resolve_blocks(const std::vector<VariableBlock>& all,
                                          const std::vector<std::string>& names) {
    std::vector<VariableBlock> out;
    for (const auto& n : names) out.push_back(find_block(all, n));
    return out;
}

}  // namespace

GapEstimate estimate_psm(const Dataset& data, const EstimationContext& ctx, Regime regime) {
    GapEstimate est;
    est.estimator = EstimatorKind::PSM;
    est.regime = regime;
    PropensityModel model = fit_propensity_model(data, ctx, regime, mix_seed(ctx.seed, 0x9599));
    Eigen::VectorXd phat = model.predict_on(data);

    std::vector<int> cell_of_row;
    std::size_t n_cells;
    if (ctx.psm_exact_blocks.empty()) {
        cell_of_row.assign(data.n_rows(), 0);
        n_cells = 1;
    } else {
        CellIndex cells = build_cells(data, resolve_blocks(ctx.blocks, ctx.psm_exact_blocks));
        cell_of_row = cells.cell_of_row;
        n_cells = cells.n_cells();
    }
    RadiusMatchSummary out =
        radius_match_on_propensity(data, cell_of_row, n_cells, phat, ctx.radius_quantile);
    fill_from_radius_match(est, out, data);
    if (model.flagged) est.diagnostics["propensity_flagged"] = 1.0;
    if (!std::isnan(model.lambda_used)) {
        est.diagnostics["prop_lambda"] = model.lambda_used;
        est.diagnostics["prop_selected"] = model.n_selected;
    }
    return est;
}

GapEstimate estimate_expsm(const Dataset& data, const CellIndex& cells,
                           const EstimationContext& ctx, Regime regime) {
    if (cells.cell_of_row.size() != data.n_rows())
        throw std::invalid_argument("expsm: cell index built on different data");
    GapEstimate est;
    est.estimator = EstimatorKind::EXPSM;
    est.regime = regime;
    PropensityModel model = fit_propensity_model(data, ctx, regime, mix_seed(ctx.seed, 0x9599));
    Eigen::VectorXd phat = model.predict_on(data);
    RadiusMatchSummary out = radius_match_on_propensity(
        data, cells.cell_of_row, cells.n_cells(), phat, ctx.radius_quantile);
    fill_from_radius_match(est, out, data);
    if (model.flagged) est.diagnostics["propensity_flagged"] = 1.0;
    if (!std::isnan(model.lambda_used)) {
        est.diagnostics["prop_lambda"] = model.lambda_used;
        est.diagnostics["prop_selected"] = model.n_selected;
    }
    return est;
}

// ------------------------------------------------------------------- PDS

namespace {

PdsSelection pds_select_on_design(const DesignMatrix& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& g, const Eigen::VectorXd& w,
                                  const EstimationContext& ctx) {
    PdsSelection sel;
    if (ctx.frozen_pds_y_lambda && ctx.frozen_pds_g_lambda) {
        sel.lambda_y = *ctx.frozen_pds_y_lambda;
        sel.lambda_g = *ctx.frozen_pds_g_lambda;
        for (const auto& [n, c] : fit_lasso_at(X, y, w, Family::Gaussian, sel.lambda_y).coefficients)
            if (c != 0.0) sel.outcome_support.push_back(n);
        for (const auto& [n, c] : fit_lasso_at(X, g, w, Family::Gaussian, sel.lambda_g).coefficients)
            if (c != 0.0) sel.group_support.push_back(n);
    } else {
        // Step 1: outcome selection on the pooled sample; step 2: linear
        // group-model selection; both at the one-SE lambda.
        LassoPath path_y =
            fit_lasso_path(X, y, w, Family::Gaussian, ctx.lasso, mix_seed(ctx.seed, 0xd1));
        LassoPath path_g =
            fit_lasso_path(X, g, w, Family::Gaussian, ctx.lasso, mix_seed(ctx.seed, 0xd2));
        sel.lambda_y = path_y.lambda_1se();
        sel.lambda_g = path_g.lambda_1se();
        sel.outcome_support = path_y.support_at(path_y.idx_1se);
        sel.group_support = path_g.support_at(path_g.idx_1se);
    }
    std::set<std::string> union_set(sel.outcome_support.begin(), sel.outcome_support.end());
    union_set.insert(sel.group_support.begin(), sel.group_support.end());
    for (const auto& name : X.names)
        if (union_set.count(name)) sel.selected.push_back(name);
    return sel;
}

}  // namespace

PdsSelection pds_select(const Dataset& data, const EstimationContext& ctx) {
    DesignBuilder builder(ctx.full, ctx.blocks);
    DesignMatrix X = builder.fit_transform(data);
    return pds_select_on_design(X, to_vector(data.outcome), group_vector(data),
                                to_vector(data.weight), ctx);
}

GapEstimate estimate_pds(const Dataset& data, const EstimationContext& ctx) {
    GapEstimate est;
    est.estimator = EstimatorKind::PDS;
    est.regime = Regime::ML;
    DesignBuilder builder(ctx.full, ctx.blocks);
    DesignMatrix X = builder.fit_transform(data);
    Eigen::VectorXd y = to_vector(data.outcome), w = to_vector(data.weight);
    Eigen::VectorXd g = group_vector(data);
    PdsSelection sel = pds_select_on_design(X, y, g, w, ctx);

    // Step 3: unpenalized refit on the union.
    DesignMatrix Xsel = select_columns(X, sel.selected);
    std::string gname = group_column_name(Xsel);
    DesignMatrix XG = prepend_group(Xsel, g, gname);
    FitResult fit = fit_wls(XG, y, w);
    est.delta_hat = fit.coefficients.at(gname);
    est.n_women_used = count_group(data, 1);
    est.n_men_used = count_group(data, 0);
    est.diagnostics["pds_selected_outcome"] = static_cast<double>(sel.outcome_support.size());
    est.diagnostics["pds_selected_group"] = static_cast<double>(sel.group_support.size());
    est.diagnostics["pds_selected_union"] = static_cast<double>(sel.selected.size());
    est.diagnostics["pds_lambda_y"] = sel.lambda_y;
    est.diagnostics["pds_lambda_g"] = sel.lambda_g;
    return est;
}

// ------------------------------------------------------------------ grid

namespace {

GapEstimate run_cell(const Dataset& data, const EstimationContext& ctx,
                     const std::vector<VariableBlock>& support_blocks, EstimatorKind estimator,
                     Regime regime) {
    switch (estimator) {
        case EstimatorKind::LRM:
            if (regime == Regime::ML) return estimate_pds(data, ctx);
            return estimate_lrm(data, ctx, regime);
        case EstimatorKind::BO: return estimate_bo(data, ctx, regime);
        case EstimatorKind::IPW: return estimate_ipw(data, ctx, regime);
        case EstimatorKind::AIPW: return estimate_aipw(data, ctx, regime);
        case EstimatorKind::EXM: return exact_match(data, build_cells(data, support_blocks));
        case EstimatorKind::PSM: return estimate_psm(data, ctx, regime);
        case EstimatorKind::EXPSM:
            return estimate_expsm(data, build_cells(data, support_blocks), ctx, regime);
        case EstimatorKind::PDS: return estimate_pds(data, ctx);
    }
    throw std::logic_error("unreachable estimator kind");
}

}  // namespace

std::vector<GapEstimate> run_grid(const Dataset& data, const EstimationContext& ctx,
                                  const GridSpec& grid, const GridOptions& options) {
    if (grid.supports.empty() || grid.estimators.empty() || grid.regimes.empty())
        throw validation_error("run_grid: supports, estimators, and regimes must be non-empty");
    std::vector<GapEstimate> results;
    for (std::size_t si = 0; si < grid.supports.size(); ++si) {
        const SupportDefinition& sup = grid.supports[si];
        std::vector<VariableBlock> sup_blocks = resolve_blocks(ctx.blocks, sup.blocks);
        CellIndex cells = build_cells(data, sup_blocks);
        Dataset sub = data.subset(cells.on_support_rows());
        bool sub_ok = sub.n_rows() > 0 && count_group(sub, 0) > 0 && count_group(sub, 1) > 0;
        for (std::size_t ei = 0; ei < grid.estimators.size(); ++ei) {
            for (std::size_t ri = 0; ri < grid.regimes.size(); ++ri) {
                EstimatorKind estimator = grid.estimators[ei];
                Regime regime = grid.regimes[ri];
                // Seed by (support, regime) only: estimators of one cell block
                // share nuisance fits the way a single analysis would, which
                // also keeps PSM and EXPSM identical on the least restrictive
                // support in the ML regime.
                std::uint64_t cell_seed = mix_seed(ctx.seed, si + 1, ri + 1);
                GapEstimate est;
                est.support_id = sup.id;
                est.estimator = estimator;
                est.regime = regime;
                est.seed = cell_seed;
                if (!sub_ok) {
                    est.failed = true;
                    est.error = "no on-support rows in one of the groups";
                    results.push_back(std::move(est));
                    continue;
                }
                EstimationContext cctx = ctx;
                cctx.seed = cell_seed;
                try {
                    GapEstimate point = run_cell(sub, cctx, sup_blocks, estimator, regime);
                    point.support_id = sup.id;
                    point.regime = regime;
                    point.seed = cell_seed;
                    if (options.bootstrap_B > 0) {
                        EstimationContext bctx = cctx;
                        if (options.ml_fast_bootstrap && regime == Regime::ML) {
                            auto diag = [&](const char* key) -> std::optional<double> {
                                auto it = point.diagnostics.find(key);
                                if (it == point.diagnostics.end()) return std::nullopt;
                                return it->second;
                            };
                            bctx.frozen_wage_lambda = diag("wage_lambda");
                            bctx.frozen_prop_lambda = diag("prop_lambda");
                            bctx.frozen_pds_y_lambda = diag("pds_lambda_y");
                            bctx.frozen_pds_g_lambda = diag("pds_lambda_g");
                        }
                        BootstrapOptions bopt;
                        bopt.B = options.bootstrap_B;
                        bopt.seed = mix_seed(cell_seed, 0xb007, ei + 1);
                        bopt.threads = options.threads;
                        BootstrapResult boot = bootstrap_se(
                            [&](const Dataset& d, std::uint64_t s) {
                                EstimationContext rctx = bctx;
                                rctx.seed = s;
                                return run_cell(d, rctx, sup_blocks, estimator, regime)
                                    .delta_hat;
                            },
                            sub, bopt);
                        point.se = boot.se;
                        point.diagnostics["bootstrap_failures"] =
                            static_cast<double>(boot.n_failures);
                    }
                    results.push_back(std::move(point));
                } catch (const std::exception& ex) {
                    est.failed = true;
                    est.error = ex.what();
                    results.push_back(std::move(est));
                }
            }
        }
    }
    return results;
}

// ---------------------------------------------------- prediction power

double oos_prediction_power(const Dataset& data, const EstimationContext& ctx, Regime regime,
                            Family family, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("oos_prediction_power: folds must be >= 2");
    const std::size_t n = data.n_rows();
    // Seeded fold assignment, stratified on the group for the Binomial case.
    Rng rng(mix_seed(seed, 0x0505));
    std::vector<int> fold(n, 0);
    if (family == Family::Binomial) {
        std::vector<std::size_t> idx0 = data.rows_of_group(0), idx1 = data.rows_of_group(1);
        rng.shuffle(idx0);
        rng.shuffle(idx1);
        int next = 0;
        for (std::size_t i : idx0) fold[i] = next++ % folds;
        for (std::size_t i : idx1) fold[i] = next++ % folds;
    } else {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        for (std::size_t k = 0; k < n; ++k) fold[idx[k]] = static_cast<int>(k) % folds;
    }

    double acc = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(i);
        Dataset train = data.subset(tr), eval = data.subset(va);
        Eigen::VectorXd w = to_vector(eval.weight);
        if (family == Family::Gaussian) {
            WageModel model = fit_wage_model(train, ctx, regime, mix_seed(seed, 0x0f, f));
            if (train.n_rows() < 2 * model.builder->column_names().size())
                throw std::runtime_error("oos_prediction_power: fewer than 2 rows per column");
            Eigen::VectorXd pred = model.predict_on(eval);
            acc += weighted_r2(to_vector(eval.outcome), pred, w);
        } else {
            PropensityModel model = fit_propensity_model(train, ctx, regime, mix_seed(seed, 0x0f, f));
            if (train.n_rows() < 2 * model.builder->column_names().size())
                throw std::runtime_error("oos_prediction_power: fewer than 2 rows per column");
            Eigen::VectorXd pred = model.predict_on(eval);
            acc += bernoulli_loglik(group_vector(eval), pred, w);
        }
    }
    return acc / folds;
}

}  // namespace paygap
