#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>

#include "paygap/design.hpp"

namespace paygap {

enum class Family { Gaussian, Binomial };

struct FitResult {
    double intercept = 0.0;
    std::map<std::string, double> coefficients;  // sparse: only fitted columns
    Family family = Family::Gaussian;
    long n_obs = 0;
    double r2_or_loglik = 0.0;  // in-sample R2 (Gaussian) or weighted log-likelihood
    bool converged = true;
    bool flagged = false;  // separation or other degeneracy worth surfacing
};

// Minimizes sum_i w_i (y_i - a - x_i b)^2. Solved by column-pivoted QR on the
// weight-scaled centered design; on detected rank deficiency the normal
// equations get a trace-scaled ridge of 1e-10 (intercept unpenalized).
FitResult fit_wls(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

// Weighted Bernoulli likelihood with logistic link, fitted by IRLS with
// step-halving. Converged when the relative log-likelihood change drops
// below 1e-9; stops flagged at 100 iterations (perfect separation ends here).
FitResult fit_logit(const DesignMatrix& X, const Eigen::VectorXd& g, const Eigen::VectorXd& w);

// Gaussian: a + Xb. Binomial: logistic(a + Xb), strictly inside (0,1).
// Every column the fit references must be present in X.
Eigen::VectorXd predict(const FitResult& fit, const DesignMatrix& X);

double logistic(double eta);

// Weighted R2 of predictions against y (1 - RSS/TSS, TSS around the weighted mean).
double weighted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                   const Eigen::VectorXd& w);

// Weighted Bernoulli log-likelihood per unit weight.
double bernoulli_loglik(const Eigen::VectorXd& g, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& w);

}  // namespace paygap
