#include "prml/comparators.hpp"

#include "prml/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace prml {

namespace {

const Replicated& replicated(const Observation& o) {
    if (const auto* r = std::get_if<Replicated>(&o)) return *r;
    throw ArgumentError("comparator needs replicated observations");
}

std::size_t covariate_dim(const Dataset& data) {
    if (data.empty()) throw ArgumentError("comparator: empty dataset");
    return replicated(data[0]).d;
}

// Design with a leading intercept column, stacked over all replicates.
void stack(const Dataset& data, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    const std::size_t d = covariate_dim(data);
    std::size_t rows = 0;
    for (const auto& o : data) rows += replicated(o).r;
    X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d + 1));
    y.resize(static_cast<Eigen::Index>(rows));
    Eigen::Index k = 0;
    for (const auto& o : data) {
        const auto& s = replicated(o);
        for (std::size_t j = 0; j < s.r; ++j, ++k) {
            X(k, 0) = 1.0;
            for (std::size_t c = 0; c < d; ++c) X(k, static_cast<Eigen::Index>(c + 1)) = s.row(j)[c];
            y(k) = s.y[j];
        }
    }
}

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

HermiteRule gauss_hermite(std::size_t K) {
    if (K == 0) throw ArgumentError("gauss_hermite: need at least one node");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    for (std::size_t k = 1; k < K; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        Jm(i, i - 1) = Jm(i - 1, i) = std::sqrt(static_cast<double>(k));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jm);
    HermiteRule rule;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(K); ++k) {
        rule.nodes.push_back(es.eigenvalues()(k));
        rule.weights.push_back(es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
    }
    return rule;
}

double gaussian_lmm_loglik_grad(std::span<const double> p, const Dataset& data, std::span<double> grad) {
    const std::size_t d = covariate_dim(data);
    if (p.size() != d + 3) throw ArgumentError("gaussian_lmm: expected beta, sigma, mu, tau");
    const double sigma = p[d], mu = p[d + 1], tau = p[d + 2];
    if (!(sigma > 0.0) || !(tau >= 0.0)) throw DomainError("gaussian_lmm: sigma must be > 0 and tau >= 0");
    const bool want = !grad.empty();
    if (want) std::fill(grad.begin(), grad.end(), 0.0);
    const double s2 = sigma * sigma, t2 = tau * tau;
    double ll = 0.0;
    std::vector<double> e;
    for (const auto& o : data) {
        const auto& s = replicated(o);
        const double r = static_cast<double>(s.r);
        e.resize(s.r);
        double S = 0.0;
        for (std::size_t j = 0; j < s.r; ++j) {
            double fit = mu;
            for (std::size_t c = 0; c < d; ++c) fit += s.row(j)[c] * p[c];
            e[j] = s.y[j] - fit;
            S += e[j];
        }
        // V = s2 I + t2 1 1';  V^-1 = (I - c 1 1') / s2
        const double c = t2 / (s2 + r * t2);
        double quad = 0.0, vv = 0.0;
        for (std::size_t j = 0; j < s.r; ++j) {
            const double vj = (e[j] - c * S) / s2;  // (V^-1 e)_j
            quad += e[j] * vj;
            vv += vj * vj;
        }
        const double logdet = (r - 1.0) * std::log(s2) + std::log(s2 + r * t2);
        ll += -0.5 * (r * std::log(2.0 * std::numbers::pi) + logdet + quad);
        if (want) {
            for (std::size_t j = 0; j < s.r; ++j) {
                const double vj = (e[j] - c * S) / s2;
                for (std::size_t k = 0; k < d; ++k) grad[k] += s.row(j)[k] * vj;
                grad[d + 1] += vj;
            }
            const double oneVe = S * (1.0 - c * r) / s2, oneVone = r * (1.0 - c * r) / s2;
            const double trV = r * (1.0 - c) / s2;
            grad[d] += sigma * (vv - trV);
            grad[d + 2] += tau * (oneVe * oneVe - oneVone);
        }
    }
    return ll;
}

double gaussian_lmm_loglik(std::span<const double> p, const Dataset& data) {
    return gaussian_lmm_loglik_grad(p, data, {});
}

double gaussian_glmm_loglik_grad(std::span<const double> p, const Dataset& data, const HermiteRule& rule,
                                 std::span<double> grad) {
    const std::size_t d = covariate_dim(data);
    if (p.size() != d + 2) throw ArgumentError("gaussian_glmm: expected beta, mu, tau");
    const double mu = p[d], tau = p[d + 1];
    const bool want = !grad.empty();
    if (want) std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t K = rule.nodes.size();
    std::vector<double> logterm(K), xb;
    std::vector<double> score(K * (d + 2));
    double ll = 0.0;
    for (const auto& o : data) {
        const auto& s = replicated(o);
        xb.assign(s.r, 0.0);
        for (std::size_t j = 0; j < s.r; ++j)
            for (std::size_t c = 0; c < d; ++c) xb[j] += s.row(j)[c] * p[c];
        std::fill(score.begin(), score.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            double lt = std::log(rule.weights[k]);
            for (std::size_t j = 0; j < s.r; ++j) {
                const double eta = mu + tau * rule.nodes[k] + xb[j];
                lt += s.y[j] * eta - log1pexp(eta);
                if (want) {
                    const double resid = s.y[j] - 1.0 / (1.0 + std::exp(-eta));
                    for (std::size_t c = 0; c < d; ++c) score[k * (d + 2) + c] += resid * s.row(j)[c];
                    score[k * (d + 2) + d] += resid;
                    score[k * (d + 2) + d + 1] += resid * rule.nodes[k];
                }
            }
            logterm[k] = lt;
        }
        const double top = *std::max_element(logterm.begin(), logterm.end());
        double L = 0.0;
        for (std::size_t k = 0; k < K; ++k) L += std::exp(logterm[k] - top);
        ll += top + std::log(L);
        if (want)
            for (std::size_t k = 0; k < K; ++k) {
                const double post = std::exp(logterm[k] - top) / L;
                for (std::size_t c = 0; c < d + 2; ++c) grad[c] += post * score[k * (d + 2) + c];
            }
    }
    return ll;
}

double gaussian_glmm_loglik(std::span<const double> p, const Dataset& data, const HermiteRule& rule) {
    return gaussian_glmm_loglik_grad(p, data, rule, {});
}

std::vector<double> pooled_least_squares(const Dataset& data) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    stack(data, X, y);
    const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
    const double rss = (y - X * b).squaredNorm();
    const double dof = std::max(1.0, static_cast<double>(X.rows() - X.cols()));
    std::vector<double> out(b.data(), b.data() + b.size());
    out.push_back(std::sqrt(rss / dof));
    return out;
}

std::vector<double> pooled_logistic(const Dataset& data, std::size_t iterations) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    stack(data, X, y);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t it = 0; it < iterations; ++it) {
        const Eigen::VectorXd eta = X * b;
        Eigen::VectorXd pr(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            pr(i) = 1.0 / (1.0 + std::exp(-eta(i)));
            w(i) = std::max(pr(i) * (1.0 - pr(i)), 1e-10);
        }
        // small ridge keeps separated data from diverging
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        H.diagonal().array() += 1e-6;
        const Eigen::VectorXd step = H.ldlt().solve(X.transpose() * (y - pr));
        b += step;
        if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    return {b.data(), b.data() + b.size()};
}

FitResult fit_gaussian_lmm(const Dataset& data, const FitOptions& base) {
    const std::size_t d = covariate_dim(data);
    const auto ols = pooled_least_squares(data);
    // split the residual variance evenly between sigma and tau for the start
    const double sd = std::max(ols[d + 1], 1e-3);
    std::vector<double> init(ols.begin() + 1, ols.begin() + 1 + static_cast<std::ptrdiff_t>(d));
    init.push_back(sd / std::sqrt(2.0));
    init.push_back(ols[0]);
    init.push_back(sd / std::sqrt(2.0));

    Box box;
    for (std::size_t c = 0; c < d; ++c) {
        box.lo.push_back(init[c] - 50.0);
        box.hi.push_back(init[c] + 50.0);
    }
    box.lo.push_back(1e-3 * sd);
    box.hi.push_back(100.0 * sd);
    box.lo.push_back(init[d + 1] - 100.0 * sd);
    box.hi.push_back(init[d + 1] + 100.0 * sd);
    box.lo.push_back(1e-4 * sd);
    box.hi.push_back(100.0 * sd);

    FitOptions opts = base;
    opts.transforms.assign(d, Transform::identity);
    opts.transforms.insert(opts.transforms.end(), {Transform::log, Transform::identity, Transform::log});
    opts.objective_label = "gaussian";
    Objective o;
    o.value = [&data](std::span<const double> t) { return gaussian_lmm_loglik(t, data); };
    o.value_grad = [&data](std::span<const double> t, std::span<double> g) {
        return gaussian_lmm_loglik_grad(t, data, g);
    };
    return fit(o, box, init, opts);
}

FitResult fit_gaussian_glmm(const Dataset& data, const FitOptions& base, std::size_t nodes) {
    const std::size_t d = covariate_dim(data);
    const HermiteRule rule = gauss_hermite(nodes);
    const auto pooled = pooled_logistic(data);
    std::vector<double> init;
    Box box;
    for (std::size_t c = 0; c < d; ++c) {
        init.push_back(std::clamp(pooled[c + 1], -20.0, 20.0));
        box.lo.push_back(-30.0);
        box.hi.push_back(30.0);
    }
    init.push_back(std::clamp(pooled[0], -20.0, 20.0));
    box.lo.push_back(-30.0);
    box.hi.push_back(30.0);
    init.push_back(1.0);
    box.lo.push_back(1e-3);
    box.hi.push_back(20.0);

    FitOptions opts = base;
    opts.transforms.assign(d + 1, Transform::identity);
    opts.transforms.push_back(Transform::log);
    opts.objective_label = "gaussian";
    Objective o;
    o.value = [&data, rule](std::span<const double> t) { return gaussian_glmm_loglik(t, data, rule); };
    o.value_grad = [&data, rule](std::span<const double> t, std::span<double> g) {
        return gaussian_glmm_loglik_grad(t, data, rule, g);
    };
    return fit(o, box, init, opts);
}

}  // namespace prml
