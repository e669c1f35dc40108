#pragma once

#include "prml/observation.hpp"
#include "prml/params.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prml {

/// Likelihood kernel p(y | theta, u) of a semiparametric mixture.
///
/// Kernels are evaluated a row at a time: for one observation and a block
/// of mixing-space nodes (node-major, u_dim() coordinates each), write
/// log p for every node. Working in log space lets the recursion shift by
/// the row maximum before exponentiating. Gradients are with respect to
/// theta on its natural scale and are returned for log p, laid out
/// node-major (grad[j * theta_dim() + k]).
///
/// Kernels are stateless and safe to call concurrently.
class Kernel {
public:
    virtual ~Kernel() = default;

    virtual std::string name() const = 0;
    virtual std::size_t theta_dim() const = 0;
    virtual std::size_t u_dim() const = 0;

    /// Unconstrained reparameterization used by the optimizer, one per component.
    virtual std::vector<Transform> transforms() const = 0;

    virtual void log_density(std::span<const double> theta, const Observation& obs,
                             std::span<const double> nodes, std::span<double> logp) const = 0;

    virtual bool has_gradient() const { return false; }
    virtual void log_density_grad(std::span<const double> theta, const Observation& obs,
                                  std::span<const double> nodes, std::span<double> logp,
                                  std::span<double> grad) const;

    virtual bool has_null() const { return false; }
    virtual void null_log_density(std::span<const double> theta, const Observation& obs,
                                  std::span<const double> nodes, std::span<double> logp) const;

    // Point evaluations on the natural density scale.
    double density(std::span<const double> theta, std::span<const double> u, const Observation& obs) const;
    /// Gradient of p (not log p) with respect to theta.
    std::vector<double> density_gradient(std::span<const double> theta, std::span<const double> u,
                                         const Observation& obs) const;
    double null_density(std::span<const double> theta, std::span<const double> u, const Observation& obs) const;
};

using KernelPtr = std::shared_ptr<const Kernel>;

/// N(y | u, sigma^2); theta = (sigma).
KernelPtr gaussian_location_kernel();

/// Random-intercept linear regression, theta = (beta_1..beta_d, sigma).
/// The covariate density g(x) is not represented.
KernelPtr linear_ri_kernel(std::size_t d, std::size_t r);

/// Random-intercept logistic regression, theta = (beta_1..beta_d).
KernelPtr logistic_ri_kernel(std::size_t d, std::size_t r);

/// Two-component AR(1) mixture over u = (sigma^2, phi); theta = null proportion.
/// p = theta N(y | 0, S_u) + (1 - theta) N(y | 0, S_u + 1 1'), with
/// S_u[j,k] = sigma^2 / (1 - phi) * phi^|j-k|.
KernelPtr ar1_mix_kernel(std::size_t T);

struct KernelSpec {
    std::string name = "density";
    std::size_t d = 2;
    std::size_t r = 4;
    std::size_t T = 50;
};

KernelPtr make_kernel(const KernelSpec& spec);

/// log N(y | 0, S_u) in O(T) via the AR(1) innovations form.
double ar1_log_normal(std::span<const double> y, double sigma2, double phi);
/// log N(y | 0, S_u + 1 1') via a rank-one update of the AR(1) precision.
double ar1_log_normal_shifted(std::span<const double> y, double sigma2, double phi);

}  // namespace prml
