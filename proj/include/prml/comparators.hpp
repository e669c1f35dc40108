#pragma once

#include "prml/inference.hpp"
#include "prml/observation.hpp"

#include <cstddef>
#include <vector>

namespace prml {

/// Probabilists' Gauss-Hermite rule: sum_k w_k g(x_k) ~ E g(Z), Z ~ N(0,1).
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
HermiteRule gauss_hermite(std::size_t K);

/// Normal random-intercept linear model y_i ~ N(mu 1 + X_i beta, sigma^2 I + tau^2 1 1').
/// Parameters, natural scale: (beta_1..beta_d, sigma, mu, tau).
double gaussian_lmm_loglik(std::span<const double> params, const Dataset& data);
double gaussian_lmm_loglik_grad(std::span<const double> params, const Dataset& data, std::span<double> grad);
FitResult fit_gaussian_lmm(const Dataset& data, const FitOptions& opts = {});

/// Normal random-intercept logistic model, intercept integrated by Gauss-Hermite.
/// Parameters: (beta_1..beta_d, mu, tau).
double gaussian_glmm_loglik(std::span<const double> params, const Dataset& data, const HermiteRule& rule);
double gaussian_glmm_loglik_grad(std::span<const double> params, const Dataset& data, const HermiteRule& rule,
                                 std::span<double> grad);
FitResult fit_gaussian_glmm(const Dataset& data, const FitOptions& opts = {}, std::size_t nodes = 20);

/// Pooled least squares of y on (1, x) over all replicates: (intercept, beta..., residual sd).
std::vector<double> pooled_least_squares(const Dataset& data);
/// Pooled logistic regression by Newton steps: (intercept, beta...).
std::vector<double> pooled_logistic(const Dataset& data, std::size_t iterations = 25);

}  // namespace prml
