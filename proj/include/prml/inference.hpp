#pragma once

#include "prml/params.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prml {

/// Log-likelihood to maximize, evaluated on the natural parameter scale.
struct Objective {
    std::function<double(std::span<const double>)> value;
    /// Optional: returns the value and writes the gradient.
    std::function<double(std::span<const double>, std::span<double>)> value_grad;

    bool has_gradient() const { return static_cast<bool>(value_grad); }
};

enum class HessianMethod { automatic, function_differences, gradient_differences };

struct FitOptions {
    /// Per-component reparameterization; empty means identity everywhere.
    std::vector<Transform> transforms;
    std::size_t max_iter = 200;
    double gtol = 1e-6;   ///< projected-gradient infinity norm on the internal scale
    double ftol = 1e-11;  ///< relative objective change
    std::size_t starts = 3;
    bool nelder_mead = false;  ///< force the derivative-free method
    double alpha = 0.05;
    HessianMethod hessian = HessianMethod::automatic;
    /// Finite-difference steps on the natural scale; empty means 1e-4 (1 + |theta_j|).
    std::vector<double> fd_steps;
    std::string objective_label = "prml";
    std::size_t permutations = 1;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool valid = false;
};

struct FitResult {
    std::vector<double> theta_hat;  ///< natural scale
    double loglik_at_max = 0.0;
    Eigen::MatrixXd hessian;  ///< of -loglik at theta_hat, natural scale
    Eigen::MatrixXd cov;      ///< inverse (or pseudo-inverse) of hessian
    std::vector<double> std_errors;
    std::vector<ConfidenceInterval> intervals;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    bool boundary = false;
    bool hessian_pd = false;
    std::string method;
    std::string objective;
    std::size_t permutations = 1;
    double alpha = 0.05;
};

/// Local maximizer over a box with multi-start; Hessian-based intervals at the optimum.
FitResult fit(const Objective& objective, const Box& box, std::span<const double> init,
              const FitOptions& opts = {});

/// -(second derivative matrix) of the objective at theta, symmetrized.
/// Steps falling outside `box` (when given) switch that axis to one-sided differences.
Eigen::MatrixXd hessian_at(const Objective& objective, std::span<const double> theta,
                           std::span<const double> steps, HessianMethod method = HessianMethod::automatic,
                           const Box* box = nullptr);

struct CovarianceResult {
    Eigen::MatrixXd cov;
    bool positive_definite = false;
};

/// Inverse when nonsingular, eigen pseudo-inverse otherwise.
CovarianceResult invert_hessian(const Eigen::MatrixXd& hessian);

/// theta_hat_j +/- z_{alpha/2} sqrt(cov_jj); invalid when cov_jj is not positive.
std::vector<ConfidenceInterval> confint(const FitResult& fit, double alpha = 0.05);

/// Upper alpha/2 quantile of the standard normal.
double normal_critical_value(double alpha);

}  // namespace prml
