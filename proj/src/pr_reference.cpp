#include "prml/pr_reference.hpp"

#include "prml/errors.hpp"

#include <cmath>

namespace prml::reference {

namespace {

PRState run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
            const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order, bool grad) {
    const Grid& grid = f0.grid();
    const std::size_t J = grid.size(), k = kernel.theta_dim();
    const std::size_t n = order.empty() ? data.size() : order.size();
    const auto a = grid.weights();
    PRState st = pr_init(f0, grad ? k : 0);

    std::vector<double> g(J), G(J * k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order.empty() ? i : order[i];
        const Observation& y = data[idx];
        const double w = weights(i + 1);

        double lambda = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            g[j] = kernel.density(theta, grid.node(j), y);
            lambda += a[j] * g[j] * st.f[j];
        }
        if (!(lambda > 0.0)) throw DegenerateObservation(idx, "predictive density is zero");

        if (grad) {
            std::vector<double> dlog_lambda(k, 0.0);
            for (std::size_t j = 0; j < J; ++j) {
                const std::vector<double> dg = kernel.density_gradient(theta, grid.node(j), y);
                for (std::size_t c = 0; c < k; ++c) {
                    G[j * k + c] = g[j] * st.grad_f[j * k + c] + dg[c] * st.f[j];
                    dlog_lambda[c] += a[j] * G[j * k + c];
                }
            }
            for (double& v : dlog_lambda) v /= lambda;
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t c = 0; c < k; ++c)
                    st.grad_f[j * k + c] = (1.0 - w) * st.grad_f[j * k + c] +
                                           w * (G[j * k + c] - g[j] * st.f[j] * dlog_lambda[c]) / lambda;
            for (std::size_t c = 0; c < k; ++c) st.grad_loglik[c] += dlog_lambda[c];
        }

        for (std::size_t j = 0; j < J; ++j) st.f[j] = (1.0 - w) * st.f[j] + w * g[j] * st.f[j] / lambda;
        st.log_predictives.push_back(std::log(lambda));
        st.loglik += std::log(lambda);
    }
    return st;
}

}  // namespace

PRState pr_run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
               const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order) {
    return run(kernel, theta, f0, weights, data, order, false);
}

PRState pr_run_grad(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
                    const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order) {
    return run(kernel, theta, f0, weights, data, order, true);
}

}  // namespace prml::reference
