#include "paygap/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace paygap {

namespace {

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

struct Standardized {
    Eigen::MatrixXd xs;      // weighted mean 0, weighted sd 1 (columns with sd 0 stay 0)
    Eigen::VectorXd omega;   // weights normalized to sum 1
    Eigen::VectorXd mean, sd;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    Standardized s;
    const Eigen::Index n = X.rows(), p = X.cols();
    s.omega = w / w.sum();
    s.mean.resize(p);
    s.sd.resize(p);
    s.xs.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double m = X.col(j).dot(s.omega);
        double v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double d = X(i, j) - m;
            v += s.omega(i) * d * d;
        }
        double sd = std::sqrt(v);
        s.mean(j) = m;
        s.sd(j) = sd;
        if (sd > 0.0)
            s.xs.col(j) = (X.col(j).array() - m) / sd;
        else
            s.xs.col(j).setZero();
    }
    return s;
}

// Gaussian coordinate descent with precomputed Gram matrix; returns the
// standardized-scale coefficients for every lambda (warm-started down the grid).
std::vector<Eigen::VectorXd> gaussian_cd_path(const Eigen::MatrixXd& xs,
                                              const Eigen::VectorXd& yc,
                                              const Eigen::VectorXd& omega,
                                              const std::vector<double>& lambdas) {
    const Eigen::Index p = xs.cols();
    Eigen::VectorXd c = xs.transpose() * omega.cwiseProduct(yc);
    Eigen::MatrixXd gram = xs.transpose() * omega.asDiagonal() * xs;

    std::vector<Eigen::VectorXd> out;
    out.reserve(lambdas.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(p);  // gram * b, maintained incrementally
    const double tol = 1e-11;
    const int max_sweeps = 2000;
    for (double lambda : lambdas) {
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_delta = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                double denom = gram(j, j);
                if (denom < 1e-12) continue;
                double rho = c(j) - gb(j) + denom * b(j);
                double bj = soft_threshold(rho, lambda) / denom;
                double delta = bj - b(j);
                if (delta != 0.0) {
                    b(j) = bj;
                    gb += delta * gram.col(j);
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (max_delta < tol) break;
        }
        out.push_back(b);
    }
    return out;
}

// Penalized logistic regression path: IRLS around a weighted quadratic, inner
// coordinate descent with residual updating. Returns standardized-scale
// coefficients and intercepts per lambda.
void binomial_cd_path(const Eigen::MatrixXd& xs, const Eigen::VectorXd& g,
                      const Eigen::VectorXd& omega, const std::vector<double>& lambdas,
                      std::vector<Eigen::VectorXd>& out_b, std::vector<double>& out_a) {
    const Eigen::Index n = xs.rows(), p = xs.cols();
    double gbar = g.dot(omega);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    double a = std::log(gbar / (1.0 - gbar));

    auto neg_loglik = [&](double a0, const Eigen::VectorXd& b0) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, a0);
        if (p > 0) eta += xs * b0;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double pi = logistic(eta(i));
            ll += omega(i) * (g(i) * std::log(pi) + (1.0 - g(i)) * std::log(1.0 - pi));
        }
        return -ll;
    };

    for (double lambda : lambdas) {
        double obj_prev = neg_loglik(a, b) + lambda * b.lpNorm<1>();
        for (int irls = 0; irls < 50; ++irls) {
            Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, a);
            if (p > 0) eta += xs * b;
            Eigen::VectorXd v(n), r(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                double pi = logistic(eta(i));
                double var = std::max(pi * (1.0 - pi), 1e-6);
                v(i) = omega(i) * var;
                // r is the working residual z - eta.
                r(i) = (g(i) - pi) / var;
            }
            Eigen::VectorXd d(p);
            for (Eigen::Index j = 0; j < p; ++j) d(j) = v.dot(xs.col(j).cwiseAbs2());
            double sv = v.sum();

            auto update_coord = [&](Eigen::Index j) {
                if (d(j) < 1e-14) return 0.0;
                double rho = v.cwiseProduct(xs.col(j)).dot(r) + d(j) * b(j);
                double bj = soft_threshold(rho, lambda) / d(j);
                double delta = bj - b(j);
                if (delta != 0.0) {
                    b(j) = bj;
                    r -= delta * xs.col(j);
                }
                return std::abs(delta);
            };
            auto update_intercept = [&]() {
                double da = v.dot(r) / sv;
                if (da != 0.0) {
                    a += da;
                    r.array() -= da;
                }
                return std::abs(da);
            };

            // Full sweeps only to detect activations; in between, iterate the
            // active set to convergence (the bulk of the work at small support).
            for (int round = 0; round < 50; ++round) {
                double max_delta = 0.0;
                std::vector<Eigen::Index> active;
                for (Eigen::Index j = 0; j < p; ++j) {
                    max_delta = std::max(max_delta, update_coord(j));
                    if (b(j) != 0.0) active.push_back(j);
                }
                max_delta = std::max(max_delta, update_intercept());
                if (max_delta < 1e-10) break;
                for (int sweep = 0; sweep < 500; ++sweep) {
                    double am = 0.0;
                    for (Eigen::Index j : active) am = std::max(am, update_coord(j));
                    am = std::max(am, update_intercept());
                    if (am < 1e-10) break;
                }
            }
            double obj = neg_loglik(a, b) + lambda * b.lpNorm<1>();
            if (std::abs(obj_prev - obj) / (std::abs(obj_prev) + 0.1) < 1e-9) break;
            obj_prev = obj;
        }
        out_b.push_back(b);
        out_a.push_back(a);
    }
}

std::vector<double> lambda_grid(double lambda_max, const LassoParams& params) {
    if (params.n_lambda < 2) throw std::invalid_argument("lasso: n_lambda must be >= 2");
    if (lambda_max <= 0.0) lambda_max = 1e-12;
    std::vector<double> out(static_cast<std::size_t>(params.n_lambda));
    double logr = std::log(params.lambda_min_ratio);
    for (int k = 0; k < params.n_lambda; ++k)
        out[static_cast<std::size_t>(k)] =
            lambda_max * std::exp(logr * static_cast<double>(k) /
                                  static_cast<double>(params.n_lambda - 1));
    out[0] = lambda_max;
    return out;
}

// Seeded fold ids; Binomial folds are stratified on the binary outcome so each
// fold sees both classes.
std::vector<int> make_folds(const Eigen::VectorXd& y, Family family, int folds,
                            std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(y.size());
    if (folds < 2) throw std::invalid_argument("lasso: folds must be >= 2");
    if (static_cast<std::size_t>(folds) > n)
        throw std::invalid_argument("lasso: more folds than rows");
    Rng rng(seed);
    std::vector<int> fold(n, 0);
    if (family == Family::Binomial) {
        std::vector<std::size_t> idx0, idx1;
        for (std::size_t i = 0; i < n; ++i)
            (y(static_cast<Eigen::Index>(i)) > 0.5 ? idx1 : idx0).push_back(i);
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
    return fold;
}

struct ScaleFit {
    std::vector<Eigen::VectorXd> coefs;  // original scale
    std::vector<double> intercepts;
};

// Runs the path on one sample and converts coefficients back to the original scale.
ScaleFit path_on_sample(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, Family family,
                        const std::vector<double>& lambdas) {
    Standardized s = standardize(X, w);
    ScaleFit out;
    const Eigen::Index p = X.cols();
    if (family == Family::Gaussian) {
        double ybar = y.dot(s.omega);
        Eigen::VectorXd yc = y.array() - ybar;
        auto bs = gaussian_cd_path(s.xs, yc, s.omega, lambdas);
        for (const auto& b : bs) {
            Eigen::VectorXd borig(p);
            double a = ybar;
            for (Eigen::Index j = 0; j < p; ++j) {
                borig(j) = s.sd(j) > 0.0 ? b(j) / s.sd(j) : 0.0;
                a -= borig(j) * s.mean(j);
            }
            out.coefs.push_back(std::move(borig));
            out.intercepts.push_back(a);
        }
    } else {
        std::vector<Eigen::VectorXd> bs;
        std::vector<double> as;
        binomial_cd_path(s.xs, y, s.omega, lambdas, bs, as);
        for (std::size_t k = 0; k < bs.size(); ++k) {
            Eigen::VectorXd borig(p);
            double a = as[k];
            for (Eigen::Index j = 0; j < p; ++j) {
                borig(j) = s.sd(j) > 0.0 ? bs[k](j) / s.sd(j) : 0.0;
                a -= borig(j) * s.mean(j);
            }
            out.coefs.push_back(std::move(borig));
            out.intercepts.push_back(a);
        }
    }
    return out;
}

double null_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, Family family) {
    Standardized s = standardize(X, w);
    double center = y.dot(s.omega);  // weighted mean of y or of the class indicator
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double score = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            score += s.omega(i) * s.xs(i, j) * (y(i) - center);
        lmax = std::max(lmax, std::abs(score));
    }
    return lmax;
}

}  // namespace

std::vector<std::string> LassoPath::support_at(int idx) const {
    const auto& b = coefs.at(static_cast<std::size_t>(idx));
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) out.push_back(column_names[static_cast<std::size_t>(j)]);
    return out;
}

FitResult LassoPath::fit_at(int idx) const {
    FitResult fit;
    fit.family = family;
    fit.intercept = intercepts.at(static_cast<std::size_t>(idx));
    const auto& b = coefs.at(static_cast<std::size_t>(idx));
    for (Eigen::Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) fit.coefficients[column_names[static_cast<std::size_t>(j)]] = b(j);
    return fit;
}

LassoPath fit_lasso_path(const DesignMatrix& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w, Family family, const LassoParams& params,
                         std::uint64_t seed) {
    if (X.values.rows() != y.size() || y.size() != w.size())
        throw std::invalid_argument("lasso: X, y, w must have aligned rows");
    LassoPath path;
    path.family = family;
    path.column_names = X.names;
    path.lambdas = lambda_grid(null_lambda_max(X.values, y, w, family), params);

    ScaleFit full = path_on_sample(X.values, y, w, family, path.lambdas);
    path.coefs = std::move(full.coefs);
    path.intercepts = std::move(full.intercepts);

    // Cross-validation at the shared grid.
    std::vector<int> fold = make_folds(y, family, params.folds, mix_seed(seed, 0x0f01d5));
    const auto L = path.lambdas.size();
    std::vector<std::vector<double>> fold_err(static_cast<std::size_t>(params.folds),
                                              std::vector<double>(L, 0.0));
    for (int f = 0; f < params.folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            (fold[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
        if (tr.empty() || va.empty()) throw std::invalid_argument("lasso: empty CV fold");
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(tr.size()), X.values.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size())),
            wtr(static_cast<Eigen::Index>(tr.size()));
        for (std::size_t k = 0; k < tr.size(); ++k) {
            Xtr.row(static_cast<Eigen::Index>(k)) = X.values.row(tr[k]);
            ytr(static_cast<Eigen::Index>(k)) = y(tr[k]);
            wtr(static_cast<Eigen::Index>(k)) = w(tr[k]);
        }
        ScaleFit cv = path_on_sample(Xtr, ytr, wtr, family, path.lambdas);
        for (std::size_t l = 0; l < L; ++l) {
            double err = 0.0, sw = 0.0;
            for (Eigen::Index i : va) {
                double eta = cv.intercepts[l] + X.values.row(i).dot(cv.coefs[l]);
                if (family == Family::Gaussian) {
                    double d = y(i) - eta;
                    err += w(i) * d * d;
                } else {
                    double pi = logistic(eta);
                    err += -2.0 * w(i) *
                           (y(i) * std::log(pi) + (1.0 - y(i)) * std::log(1.0 - pi));
                }
                sw += w(i);
            }
            fold_err[static_cast<std::size_t>(f)][l] = err / sw;
        }
    }
    path.cv_mean.resize(L);
    path.cv_se.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        double m = 0.0;
        for (int f = 0; f < params.folds; ++f) m += fold_err[static_cast<std::size_t>(f)][l];
        m /= params.folds;
        double s2 = 0.0;
        for (int f = 0; f < params.folds; ++f) {
            double d = fold_err[static_cast<std::size_t>(f)][l] - m;
            s2 += d * d;
        }
        s2 /= (params.folds - 1);
        path.cv_mean[l] = m;
        path.cv_se[l] = std::sqrt(s2 / params.folds);
    }
    path.idx_min = 0;
    for (std::size_t l = 1; l < L; ++l)
        if (path.cv_mean[l] < path.cv_mean[static_cast<std::size_t>(path.idx_min)])
            path.idx_min = static_cast<int>(l);
    double bar = path.cv_mean[static_cast<std::size_t>(path.idx_min)] +
                 path.cv_se[static_cast<std::size_t>(path.idx_min)];
    path.idx_1se = path.idx_min;
    for (std::size_t l = 0; l < L; ++l) {
        if (path.cv_mean[l] <= bar) {
            path.idx_1se = static_cast<int>(l);  // largest lambda within one SE
            break;
        }
    }
    return path;
}

FitResult fit_lasso_at(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       Family family, double lambda) {
    std::vector<double> grid{lambda};
    ScaleFit fit = path_on_sample(X.values, y, w, family, grid);
    FitResult out;
    out.family = family;
    out.n_obs = y.size();
    out.intercept = fit.intercepts[0];
    for (Eigen::Index j = 0; j < fit.coefs[0].size(); ++j)
        if (fit.coefs[0](j) != 0.0)
            out.coefficients[X.names[static_cast<std::size_t>(j)]] = fit.coefs[0](j);
    return out;
}

DesignMatrix select_columns(const DesignMatrix& X, const std::vector<std::string>& names) {
    DesignMatrix out;
    out.values.resize(X.values.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) {
        int j = X.column_index(names[k]);
        if (j < 0)
            throw std::invalid_argument("select_columns: unknown column '" + names[k] + "'");
        out.values.col(static_cast<Eigen::Index>(k)) = X.values.col(j);
        out.names.push_back(names[k]);
    }
    return out;
}

FitResult post_lasso_refit(const LassoPath& path, LambdaChoice at, const DesignMatrix& X,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    int idx = at == LambdaChoice::Min ? path.idx_min : path.idx_1se;
    std::vector<std::string> support = path.support_at(idx);
    DesignMatrix sub = select_columns(X, support);
    return fit_wls(sub, y, w);
}

}  // namespace paygap
