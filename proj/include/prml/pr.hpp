#pragma once

#include "prml/grid.hpp"
#include "prml/kernels.hpp"
#include "prml/observation.hpp"
#include "prml/weights.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace prml {

/// State of one predictive recursion pass.
struct PRState {
    GridPtr grid;
    std::vector<double> f;                ///< current mixing density at the grid nodes
    std::vector<double> log_predictives;  ///< log lambda_i = log m_{i-1}(Y_i), in visiting order
    double loglik = 0.0;                  ///< sum of log_predictives

    std::size_t theta_dim = 0;             ///< nonzero when gradients are carried
    std::vector<double> grad_f;            ///< node-major J x theta_dim, d f_i / d theta
    std::vector<double> grad_loglik;       ///< d loglik / d theta

    double max_drift = 0.0;  ///< largest |integral(f) - 1| observed before renormalizing

    bool tracks_gradient() const { return theta_dim > 0; }
    std::size_t steps() const { return log_predictives.size(); }
    GridDensity density() const { return GridDensity(grid, f); }
    std::vector<double> predictives() const;
};

/// Start a recursion from f0; with theta_dim > 0 the gradient fields are
/// carried with d f0 / d theta = 0.
PRState pr_init(const GridDensity& f0, std::size_t theta_dim = 0);

/// One PR update with weight w in (0, 1). `index` labels the observation in
/// error messages. When the state carries gradients the kernel must provide them.
PRState pr_step(PRState state, const Kernel& kernel, std::span<const double> theta, const Observation& obs,
                double w, std::size_t index = 0);

/// Sequential PR pass. When `order` is non-empty the observations are
/// visited as data[order[0]], data[order[1]], ...; weights follow the
/// visiting step, not the original index.
PRState pr_run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
               const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order = {});

/// PR pass carrying d f_i / d theta and accumulating the gradient of the
/// log marginal likelihood as a by-product.
PRState pr_run_grad(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
                    const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order = {});

/// m_f(y) = integral of p(y | theta, u) f(u) over the grid.
double mixture_density(const PRState& state, const Kernel& kernel, std::span<const double> theta,
                       const Observation& obs);
double log_mixture_density(const PRState& state, const Kernel& kernel, std::span<const double> theta,
                           const Observation& obs);

/// Evaluates a kernel row over all grid nodes, splitting the node block
/// across OpenMP threads when the grid is large enough to pay for it.
void kernel_row(const Kernel& kernel, std::span<const double> theta, const Observation& obs, const Grid& grid,
                std::span<double> logp);
void kernel_row_grad(const Kernel& kernel, std::span<const double> theta, const Observation& obs,
                     const Grid& grid, std::span<double> logp, std::span<double> grad);

/// Node count above which a kernel row is evaluated in parallel.
inline constexpr std::size_t kParallelRowThreshold = 256;

}  // namespace prml
