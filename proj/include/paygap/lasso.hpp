#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "paygap/linmod.hpp"

namespace paygap {

struct LassoParams {
    int n_lambda = 100;
    int folds = 5;
    double lambda_min_ratio = 1e-4;
};

// Full regularization path with cross-validated tuning. Coefficients are
// reported on the original covariate scale; the intercept is never penalized.
struct LassoPath {
    Family family = Family::Gaussian;
    std::vector<std::string> column_names;
    std::vector<double> lambdas;            // strictly decreasing, lambdas[0] = lambda_max
    std::vector<double> intercepts;         // per lambda
    std::vector<Eigen::VectorXd> coefs;     // per lambda, original scale
    std::vector<double> cv_mean;            // weighted MSE (Gaussian) / deviance (Binomial)
    std::vector<double> cv_se;              // sd of fold means / sqrt(folds)
    int idx_min = -1;
    int idx_1se = -1;

    double lambda_min() const { return lambdas.at(static_cast<std::size_t>(idx_min)); }
    double lambda_1se() const { return lambdas.at(static_cast<std::size_t>(idx_1se)); }
    std::vector<std::string> support_at(int idx) const;
    FitResult fit_at(int idx) const;  // sparse FitResult for the given grid point
};

enum class LambdaChoice { Min, OneSE };

// Coordinate descent over a log-spaced grid from lambda_max down to
// lambda_min_ratio*lambda_max with warm starts; 5-fold seeded CV by default.
// Binomial CV folds are stratified on the outcome.
LassoPath fit_lasso_path(const DesignMatrix& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w, Family family, const LassoParams& params,
                         std::uint64_t seed);

// Single fixed-lambda fit, no CV; used by the fast bootstrap mode that
// freezes the full-sample lambda inside replicates.
FitResult fit_lasso_at(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       Family family, double lambda);

// Unpenalized WLS refit on the support selected at the given grid point.
FitResult post_lasso_refit(const LassoPath& path, LambdaChoice at, const DesignMatrix& X,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& w);

DesignMatrix select_columns(const DesignMatrix& X, const std::vector<std::string>& names);

}  // namespace paygap
