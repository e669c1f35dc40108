#include "prml/pr.hpp"

#include "prml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace prml {

namespace {

constexpr double kRenormalizeAbove = 1e-12;
constexpr std::size_t kRowChunk = 64;

// Scratch buffers reused across the steps of one pass.
struct Workspace {
    std::vector<double> logp, g, dlogp, G;
};

// Runs body(lo, len) over fixed-size chunks of [0, n) in parallel. The first
// exception thrown by any chunk is rethrown on the calling thread.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body) {
    const std::ptrdiff_t chunks = static_cast<std::ptrdiff_t>((n + kRowChunk - 1) / kRowChunk);
    std::exception_ptr error;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * kRowChunk;
        try {
            body(lo, std::min(kRowChunk, n - lo));
        } catch (...) {
#pragma omp critical(prml_row_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

void step_inplace(PRState& st, Workspace& ws, const Kernel& kernel, std::span<const double> theta,
                  const Observation& obs, double w, std::size_t index) {
    if (!(w > 0.0 && w < 1.0)) throw ArgumentError("PR weight must lie in (0,1)");
    const Grid& grid = *st.grid;
    const std::size_t J = grid.size();
    const std::size_t k = st.theta_dim;
    const auto a = grid.weights();
    ws.logp.resize(J);
    ws.g.resize(J);

    if (k > 0) {
        ws.dlogp.resize(J * k);
        kernel_row_grad(kernel, theta, obs, grid, ws.logp, ws.dlogp);
    } else {
        kernel_row(kernel, theta, obs, grid, ws.logp);
    }

    const double shift = *std::max_element(ws.logp.begin(), ws.logp.end());
    if (!std::isfinite(shift)) throw DegenerateObservation(index, "kernel vanishes on the whole grid");

    // Everything below is scaled by exp(-shift); ratios are unaffected.
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        ws.g[j] = std::exp(ws.logp[j] - shift);
        s += a[j] * ws.g[j] * st.f[j];
    }
    if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateObservation(index, "predictive density is zero");

    if (k > 0) {
        // G(u) = g grad f + grad g f, with grad g = g grad log p.
        ws.G.assign(J * k, 0.0);
        std::vector<double> dlog_lambda(k, 0.0);
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t c = 0; c < k; ++c) {
                const double Gjc = ws.g[j] * (st.grad_f[j * k + c] + ws.dlogp[j * k + c] * st.f[j]);
                ws.G[j * k + c] = Gjc;
                dlog_lambda[c] += a[j] * Gjc;
            }
        for (double& v : dlog_lambda) v /= s;
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t c = 0; c < k; ++c) {
                double& gf = st.grad_f[j * k + c];
                gf = (1.0 - w) * gf + w * (ws.G[j * k + c] - ws.g[j] * st.f[j] * dlog_lambda[c]) / s;
            }
        for (std::size_t c = 0; c < k; ++c) st.grad_loglik[c] += dlog_lambda[c];
    }

    for (std::size_t j = 0; j < J; ++j) st.f[j] = (1.0 - w) * st.f[j] + w * ws.g[j] * st.f[j] / s;

    const double log_lambda = shift + std::log(s);
    st.log_predictives.push_back(log_lambda);
    st.loglik += log_lambda;

    const double total = grid.integrate(st.f);
    const double drift = std::abs(total - 1.0);
    st.max_drift = std::max(st.max_drift, drift);
    if (drift > kRenormalizeAbove) {
        for (double& v : st.f) v /= total;
        for (double& v : st.grad_f) v /= total;
    }
}

PRState run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
            const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order,
            std::size_t theta_dim) {
    const std::size_t n = order.empty() ? data.size() : order.size();
    if (auto len = weights.length(); len && *len < n)
        throw ArgumentError("weight sequence shorter than the data");
    if (theta.size() != kernel.theta_dim()) throw ArgumentError("theta has wrong dimension for kernel");
    PRState st = pr_init(f0, theta_dim);
    st.log_predictives.reserve(n);
    Workspace ws;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order.empty() ? i : order[i];
        if (idx >= data.size()) throw ArgumentError("visiting order index out of range");
        step_inplace(st, ws, kernel, theta, data[idx], weights(i + 1), idx);
    }
    return st;
}

}  // namespace

std::vector<double> PRState::predictives() const {
    std::vector<double> out(log_predictives.size());
    std::transform(log_predictives.begin(), log_predictives.end(), out.begin(), [](double v) { return std::exp(v); });
    return out;
}

PRState pr_init(const GridDensity& f0, std::size_t theta_dim) {
    PRState st;
    st.grid = f0.grid_ptr();
    st.f.assign(f0.values().begin(), f0.values().end());
    st.theta_dim = theta_dim;
    if (theta_dim > 0) {
        st.grad_f.assign(st.f.size() * theta_dim, 0.0);
        st.grad_loglik.assign(theta_dim, 0.0);
    }
    return st;
}

PRState pr_step(PRState state, const Kernel& kernel, std::span<const double> theta, const Observation& obs,
                double w, std::size_t index) {
    if (state.tracks_gradient() && !kernel.has_gradient())
        throw CapabilityError(kernel.name() + " kernel provides no gradient");
    Workspace ws;
    step_inplace(state, ws, kernel, theta, obs, w, index);
    return state;
}

PRState pr_run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
               const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order) {
    return run(kernel, theta, f0, weights, data, order, 0);
}

PRState pr_run_grad(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
                    const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order) {
    if (!kernel.has_gradient()) throw CapabilityError(kernel.name() + " kernel provides no gradient");
    return run(kernel, theta, f0, weights, data, order, kernel.theta_dim());
}

double log_mixture_density(const PRState& state, const Kernel& kernel, std::span<const double> theta,
                           const Observation& obs) {
    const Grid& grid = *state.grid;
    std::vector<double> logp(grid.size());
    kernel_row(kernel, theta, obs, grid, logp);
    const double shift = *std::max_element(logp.begin(), logp.end());
    if (!std::isfinite(shift)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    const auto a = grid.weights();
    for (std::size_t j = 0; j < logp.size(); ++j) s += a[j] * std::exp(logp[j] - shift) * state.f[j];
    return shift + std::log(s);
}

double mixture_density(const PRState& state, const Kernel& kernel, std::span<const double> theta,
                       const Observation& obs) {
    return std::exp(log_mixture_density(state, kernel, theta, obs));
}

void kernel_row(const Kernel& kernel, std::span<const double> theta, const Observation& obs, const Grid& grid,
                std::span<double> logp) {
    const std::size_t J = grid.size(), ud = grid.dim();
    if (ud != kernel.u_dim()) throw ArgumentError("grid dimension does not match kernel mixing space");
    const auto nodes = grid.nodes();
    if (J < kParallelRowThreshold) {
        kernel.log_density(theta, obs, nodes, logp);
        return;
    }
    parallel_chunks(J, [&](std::size_t lo, std::size_t len) {
        kernel.log_density(theta, obs, nodes.subspan(lo * ud, len * ud), logp.subspan(lo, len));
    });
}

void kernel_row_grad(const Kernel& kernel, std::span<const double> theta, const Observation& obs,
                     const Grid& grid, std::span<double> logp, std::span<double> grad) {
    const std::size_t J = grid.size(), ud = grid.dim(), k = kernel.theta_dim();
    if (ud != kernel.u_dim()) throw ArgumentError("grid dimension does not match kernel mixing space");
    const auto nodes = grid.nodes();
    if (J < kParallelRowThreshold) {
        kernel.log_density_grad(theta, obs, nodes, logp, grad);
        return;
    }
    parallel_chunks(J, [&](std::size_t lo, std::size_t len) {
        kernel.log_density_grad(theta, obs, nodes.subspan(lo * ud, len * ud), logp.subspan(lo, len),
                                grad.subspan(lo * k, len * k));
    });
}

}  // namespace prml
