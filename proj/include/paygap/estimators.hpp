#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paygap/lasso.hpp"
#include "paygap/support.hpp"

namespace paygap {

enum class EstimatorKind { LRM, BO, IPW, AIPW, EXM, PSM, EXPSM, PDS };

std::string estimator_name(EstimatorKind e);
EstimatorKind parse_estimator(const std::string& s);

struct GapEstimate {
    EstimatorKind estimator = EstimatorKind::LRM;
    Regime regime = Regime::Baseline;
    std::string support_id;
    double delta_hat = std::numeric_limits<double>::quiet_NaN();  // log points
    double se = std::numeric_limits<double>::quiet_NaN();
    long n_women_used = 0, n_men_used = 0, n_trimmed = 0, n_unmatched = 0;
    std::map<std::string, double> diagnostics;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
};

// Shared settings for all nuisance fits and estimators. The frozen lambdas
// are only set by the fast bootstrap mode, which re-uses the full-sample
// penalty inside replicates instead of re-running cross-validation.
struct EstimationContext {
    ModelSpec baseline;
    ModelSpec full;
    std::vector<VariableBlock> blocks;
    LassoParams lasso;
    double trim_quantile = 0.995;
    double radius_quantile = 0.99;
    int aipw_folds = 2;
    std::vector<std::string> psm_exact_blocks;  // least restrictive support's blocks
    std::uint64_t seed = 1;
    std::optional<double> frozen_wage_lambda;
    std::optional<double> frozen_prop_lambda;
    std::optional<double> frozen_pds_y_lambda;
    std::optional<double> frozen_pds_g_lambda;

    const ModelSpec& spec_for(Regime r) const {
        return r == Regime::Baseline ? baseline : full;
    }
};

// Reference-group wage model: WLS for baseline/full, post-lasso refit at the
// one-SE lambda for ML. Prediction re-uses the builder fitted on the fit rows.
struct WageModel {
    FitResult fit;
    std::shared_ptr<DesignBuilder> builder;
    double lambda_used = std::numeric_limits<double>::quiet_NaN();
    int n_selected = -1;
    Eigen::VectorXd predict_on(const Dataset& data) const;
};
WageModel fit_wage_model(const Dataset& fit_rows, const EstimationContext& ctx, Regime regime,
                         std::uint64_t seed);

// Propensity model: logit for baseline/full, penalized logit-lasso at the
// one-SE lambda for ML (penalized coefficients are used directly).
struct PropensityModel {
    FitResult fit;
    std::shared_ptr<DesignBuilder> builder;
    bool flagged = false;
    double lambda_used = std::numeric_limits<double>::quiet_NaN();
    int n_selected = -1;
    Eigen::VectorXd predict_on(const Dataset& data) const;  // strictly in (0,1)
};
PropensityModel fit_propensity_model(const Dataset& data, const EstimationContext& ctx,
                                     Regime regime, std::uint64_t seed);

GapEstimate estimate_lrm(const Dataset& data, const EstimationContext& ctx, Regime regime);
GapEstimate estimate_bo(const Dataset& data, const EstimationContext& ctx, Regime regime);
GapEstimate estimate_ipw(const Dataset& data, const EstimationContext& ctx, Regime regime);
GapEstimate estimate_aipw(const Dataset& data, const EstimationContext& ctx, Regime regime);
GapEstimate exact_match(const Dataset& data, const CellIndex& cells);
GapEstimate estimate_psm(const Dataset& data, const EstimationContext& ctx, Regime regime);
GapEstimate estimate_expsm(const Dataset& data, const CellIndex& cells,
                           const EstimationContext& ctx, Regime regime);
GapEstimate estimate_pds(const Dataset& data, const EstimationContext& ctx);

// Three-step post-double-selection: Gaussian outcome LASSO on the pooled
// sample, linear group-model LASSO, union of the one-SE supports.
struct PdsSelection {
    std::vector<std::string> outcome_support, group_support;
    std::vector<std::string> selected;  // union, in design column order
    double lambda_y = 0.0, lambda_g = 0.0;
};
PdsSelection pds_select(const Dataset& data, const EstimationContext& ctx);

// Lower-level entry points with injectable nuisances (exposed for testing the
// reweighting and matching mechanics against hand-computed values).
struct IpwParts {
    double delta = 0.0;
    long n_trimmed = 0;
    double weight_sum = 0.0;  // of the normalized reference-group weights
};
IpwParts ipw_from_propensity(const Dataset& data, const Eigen::VectorXd& phat,
                             double trim_quantile);
double aipw_from_nuisances(const Dataset& data, const Eigen::VectorXd& mu0,
                           const Eigen::VectorXd& phat, double trim_quantile,
                           double* correction = nullptr);

struct RadiusMatchSummary {
    double delta = 0.0;
    long n_matched = 0, n_unmatched = 0, n_men_used = 0;
    double radius = 0.0;
    bool degenerate = false;  // propensity numerically constant
};
RadiusMatchSummary radius_match_on_propensity(const Dataset& data,
                                              const std::vector<int>& cell_of_row,
                                              std::size_t n_cells, const Eigen::VectorXd& phat,
                                              double radius_quantile);

struct GridSpec {
    std::vector<SupportDefinition> supports;
    std::vector<EstimatorKind> estimators;
    std::vector<Regime> regimes;
};

struct GridOptions {
    int bootstrap_B = 200;       // 0 disables standard errors
    bool ml_fast_bootstrap = false;
    int threads = 1;
};

// Cartesian product of supports x estimators x regimes on the on-support
// restriction of the data. Individual cell failures are recorded, the grid
// continues. (LRM, ML) cells run the post-double-selection procedure.
std::vector<GapEstimate> run_grid(const Dataset& data, const EstimationContext& ctx,
                                  const GridSpec& grid, const GridOptions& options);

// 2-fold cross-fitted out-of-sample prediction power: weighted R2 for the
// Gaussian wage model, weighted mean log-likelihood per observation for the
// Binomial group model.
double oos_prediction_power(const Dataset& data, const EstimationContext& ctx, Regime regime,
                            Family family, int folds, std::uint64_t seed);

}  // namespace paygap
