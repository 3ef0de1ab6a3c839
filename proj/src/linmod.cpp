#include "paygap/linmod.hpp"

#include <cmath>

namespace paygap {

double logistic(double eta) {
    double p;
    if (eta >= 0.0) {
        double e = std::exp(-eta);
        p = 1.0 / (1.0 + e);
    } else {
        double e = std::exp(eta);
        p = e / (1.0 + e);
    }
    const double eps = 1e-12;
    if (p < eps) return eps;
    if (p > 1.0 - eps) return 1.0 - eps;
    return p;
}

double weighted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                   const Eigen::VectorXd& w) {
    double sw = w.sum();
    double ybar = y.dot(w) / sw;
    double rss = 0.0, tss = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        rss += w(i) * (y(i) - yhat(i)) * (y(i) - yhat(i));
        tss += w(i) * (y(i) - ybar) * (y(i) - ybar);
    }
    if (tss == 0.0) return 0.0;
    return 1.0 - rss / tss;
}

double bernoulli_loglik(const Eigen::VectorXd& g, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& w) {
    double ll = 0.0, sw = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        ll += w(i) * (g(i) * std::log(p(i)) + (1.0 - g(i)) * std::log(1.0 - p(i)));
        sw += w(i);
    }
    return ll / sw;
}

namespace {

// Solves min_b ||sqrt(w) (ytilde - Xtilde b)||^2 for the centered system,
// falling back to ridge-regularized normal equations on rank deficiency.
Eigen::VectorXd solve_centered_wls(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
    if (xs.cols() == 0) return Eigen::VectorXd(0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    if (qr.rank() == xs.cols()) return qr.solve(ys);
    Eigen::MatrixXd gram = xs.transpose() * xs;
    double ridge = 1e-10 * gram.trace() / static_cast<double>(xs.cols());
    if (ridge <= 0.0) ridge = 1e-10;
    gram.diagonal().array() += ridge;
    return gram.ldlt().solve(xs.transpose() * ys);
}

void check_shapes(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    if (X.values.rows() != y.size() || y.size() != w.size())
        throw std::invalid_argument("fit: X, y, w must have aligned rows");
    if (y.size() < 2) throw std::invalid_argument("fit: need at least 2 observations");
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (!(w(i) > 0.0)) throw std::invalid_argument("fit: weights must be positive");
}

}  // namespace

FitResult fit_wls(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    check_shapes(X, y, w);
    const Eigen::Index n = y.size();
    const Eigen::Index p = X.values.cols();
    double sw = w.sum();

    Eigen::VectorXd sqw = w.cwiseSqrt();
    Eigen::RowVectorXd xbar = (w.transpose() * X.values) / sw;
    double ybar = y.dot(w) / sw;

    Eigen::MatrixXd xs(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        xs.col(j) = sqw.cwiseProduct((X.values.col(j).array() - xbar(j)).matrix());
    Eigen::VectorXd ys = sqw.cwiseProduct((y.array() - ybar).matrix());

    Eigen::VectorXd b = solve_centered_wls(xs, ys);

    FitResult fit;
    fit.family = Family::Gaussian;
    fit.n_obs = n;
    fit.intercept = ybar - (p > 0 ? xbar.dot(b) : 0.0);
    for (Eigen::Index j = 0; j < p; ++j)
        fit.coefficients[X.names[static_cast<std::size_t>(j)]] = b(j);
    Eigen::VectorXd yhat = Eigen::VectorXd::Constant(n, fit.intercept);
    if (p > 0) yhat += X.values * b;
    fit.r2_or_loglik = weighted_r2(y, yhat, w);
    return fit;
}

FitResult fit_logit(const DesignMatrix& X, const Eigen::VectorXd& g, const Eigen::VectorXd& w) {
    check_shapes(X, g, w);
    const Eigen::Index n = g.size();
    const Eigen::Index p = X.values.cols();
    double sw = w.sum();

    double gbar = g.dot(w) / sw;
    if (gbar <= 0.0 || gbar >= 1.0)
        throw std::invalid_argument("fit_logit: both classes must be present");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double alpha = std::log(gbar / (1.0 - gbar));

    auto loglik_of = [&](double a, const Eigen::VectorXd& b) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, a);
        if (p > 0) eta += X.values * b;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double pi = logistic(eta(i));
            ll += w(i) * (g(i) * std::log(pi) + (1.0 - g(i)) * std::log(1.0 - pi));
        }
        return ll;
    };

    double ll = loglik_of(alpha, beta);
    bool converged = false;
    const int max_iter = 100;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, alpha);
        if (p > 0) eta += X.values * beta;
        Eigen::VectorXd mu(n), v(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double pi = logistic(eta(i));
            mu(i) = pi;
            double var = std::max(pi * (1.0 - pi), 1e-10);
            v(i) = w(i) * var;
            z(i) = eta(i) + (g(i) - pi) / var;
        }
        // Weighted least squares of the working response on [1 X].
        double svw = v.sum();
        double zbar = z.dot(v) / svw;
        Eigen::VectorXd new_beta(p);
        double new_alpha;
        if (p > 0) {
            Eigen::RowVectorXd xbar = (v.transpose() * X.values) / svw;
            Eigen::VectorXd sqv = v.cwiseSqrt();
            Eigen::MatrixXd xs(n, p);
            for (Eigen::Index j = 0; j < p; ++j)
                xs.col(j) = sqv.cwiseProduct((X.values.col(j).array() - xbar(j)).matrix());
            Eigen::VectorXd zs = sqv.cwiseProduct((z.array() - zbar).matrix());
            new_beta = solve_centered_wls(xs, zs);
            new_alpha = zbar - xbar.dot(new_beta);
        } else {
            new_beta = beta;
            new_alpha = zbar;
        }
        double new_ll = loglik_of(new_alpha, new_beta);
        // Step-halving back toward the current iterate on likelihood decrease.
        int halvings = 0;
        while (new_ll < ll && halvings < 30) {
            new_alpha = 0.5 * (new_alpha + alpha);
            new_beta = 0.5 * (new_beta + beta);
            new_ll = loglik_of(new_alpha, new_beta);
            ++halvings;
        }
        double rel_change = std::abs(new_ll - ll) / (std::abs(ll) + 0.1);
        alpha = new_alpha;
        beta = new_beta;
        ll = new_ll;
        if (rel_change < 1e-9) {
            converged = true;
            ++iter;
            break;
        }
    }

    FitResult fit;
    fit.family = Family::Binomial;
    fit.n_obs = n;
    fit.intercept = alpha;
    for (Eigen::Index j = 0; j < p; ++j)
        fit.coefficients[X.names[static_cast<std::size_t>(j)]] = beta(j);
    fit.r2_or_loglik = ll / sw;
    fit.converged = converged;
    fit.flagged = !converged;
    return fit;
}

Eigen::VectorXd predict(const FitResult& fit, const DesignMatrix& X) {
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(X.values.rows(), fit.intercept);
    for (const auto& [name, coef] : fit.coefficients) {
        int j = X.column_index(name);
        if (j < 0)
            throw std::invalid_argument("predict: design matrix lacks fitted column '" + name +
                                        "'");
        eta += coef * X.values.col(j);
    }
    if (fit.family == Family::Gaussian) return eta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = logistic(eta(i));
    return eta;
}

}  // namespace paygap
