#include "prml/likelihood.hpp"

#include "prml/errors.hpp"
#include "prml/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace prml {

namespace {

void require_data(const Dataset& data) {
    if (data.empty()) throw ArgumentError("log-likelihood needs at least one observation");
}

// Sum of log m_f(Y_i) over the data for the density in `st`, with gradient
// when the state carries d f / d theta.
LogLik plug_in_loglik(const PRState& st, const Kernel& kernel, std::span<const double> theta,
                      const Dataset& data, bool with_grad) {
    const Grid& grid = *st.grid;
    const std::size_t J = grid.size(), k = kernel.theta_dim();
    const auto a = grid.weights();
    LogLik out;
    if (with_grad) out.grad.assign(k, 0.0);
    std::vector<double> logp(J), dlogp(with_grad ? J * k : 0), num(k);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (with_grad)
            kernel_row_grad(kernel, theta, data[i], grid, logp, dlogp);
        else
            kernel_row(kernel, theta, data[i], grid, logp);
        const double shift = *std::max_element(logp.begin(), logp.end());
        if (!std::isfinite(shift)) throw DegenerateObservation(i, "kernel vanishes on the whole grid");
        double m = 0.0;
        std::fill(num.begin(), num.end(), 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            const double ag = a[j] * std::exp(logp[j] - shift);
            m += ag * st.f[j];
            if (with_grad)
                for (std::size_t c = 0; c < k; ++c)
                    num[c] += ag * (dlogp[j * k + c] * st.f[j] + st.grad_f[j * k + c]);
        }
        if (!(m > 0.0)) throw DegenerateObservation(i, "plug-in mixture density is zero");
        out.value += shift + std::log(m);
        if (with_grad)
            for (std::size_t c = 0; c < k; ++c) out.grad[c] += num[c] / m;
    }
    return out;
}

LogLik evaluate(std::span<const double> theta, const Dataset& data, const PRModel& model,
                std::span<const std::size_t> order, ObjectiveKind which, bool with_grad) {
    require_data(data);
    const Kernel& kernel = *model.kernel;
    if (which == ObjectiveKind::prml) {
        if (with_grad) {
            PRState st = pr_run_grad(kernel, theta, model.f0, model.weights, data, order);
            return {st.loglik, std::move(st.grad_loglik)};
        }
        return {pr_run(kernel, theta, model.f0, model.weights, data, order).loglik, {}};
    }
    const PRState st = with_grad ? pr_run_grad(kernel, theta, model.f0, model.weights, data, order)
                                 : pr_run(kernel, theta, model.f0, model.weights, data, order);
    return plug_in_loglik(st, kernel, theta, data, with_grad);
}

LogLik average(std::span<const double> theta, const Dataset& data, const PRModel& model,
               const LikelihoodConfig& cfg, ObjectiveKind which, bool with_grad, bool parallel) {
    require_data(data);
    const auto perms = make_permutations(data.size(), cfg);
    std::vector<LogLik> parts(perms.size());
    auto one = [&](std::size_t p) { parts[p] = evaluate(theta, data, model, perms[p], which, with_grad); };
    if (parallel)
        parallel_for(perms.size(), one);
    else
        for (std::size_t p = 0; p < perms.size(); ++p) one(p);

    LogLik out;
    if (with_grad) out.grad.assign(model.kernel->theta_dim(), 0.0);
    for (const auto& part : parts) {
        out.value += part.value;
        for (std::size_t c = 0; c < out.grad.size(); ++c) out.grad[c] += part.grad[c];
    }
    const double M = static_cast<double>(parts.size());
    out.value /= M;
    for (double& g : out.grad) g /= M;
    return out;
}

}  // namespace

const char* objective_name(ObjectiveKind kind) { return kind == ObjectiveKind::prml ? "prml" : "profile"; }

ObjectiveKind parse_objective(const std::string& name) {
    if (name == "prml" || name == "marginal") return ObjectiveKind::prml;
    if (name == "profile") return ObjectiveKind::profile;
    throw ArgumentError("unknown objective '" + name + "'");
}

double prml_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                   std::span<const std::size_t> order) {
    return evaluate(theta, data, model, order, ObjectiveKind::prml, false).value;
}

LogLik prml_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                        std::span<const std::size_t> order) {
    return evaluate(theta, data, model, order, ObjectiveKind::prml, true);
}

double profile_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      std::span<const std::size_t> order) {
    return evaluate(theta, data, model, order, ObjectiveKind::profile, false).value;
}

LogLik profile_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                           std::span<const std::size_t> order) {
    return evaluate(theta, data, model, order, ObjectiveKind::profile, true);
}

std::vector<std::vector<std::size_t>> make_permutations(std::size_t n, const LikelihoodConfig& cfg) {
    if (cfg.permutations < 1) throw ArgumentError("permutation count must be at least 1");
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::vector<std::size_t>> perms(cfg.permutations, std::vector<std::size_t>(n));
    for (std::size_t p = 0; p < perms.size(); ++p) {
        auto& perm = perms[p];
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        if (p == 0 && cfg.order == DataOrder::as_given) continue;
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(perm[i - 1], perm[pick(rng)]);
        }
    }
    return perms;
}

double averaged_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                       const LikelihoodConfig& cfg, ObjectiveKind which) {
    return average(theta, data, model, cfg, which, false, true).value;
}

LogLik averaged_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                            const LikelihoodConfig& cfg, ObjectiveKind which) {
    return average(theta, data, model, cfg, which, true, true);
}

double reference::averaged_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                                  const LikelihoodConfig& cfg, ObjectiveKind which) {
    return average(theta, data, model, cfg, which, false, false).value;
}

std::vector<double> true_log_densities(const Dataset& data, const LogDensityFn& true_logm) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = true_logm(data[i]);
    return out;
}

KnValue kn_normalized(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      std::span<const double> true_logm, std::span<const std::size_t> order) {
    require_data(data);
    if (true_logm.size() != data.size()) throw ArgumentError("K_n: one true log density per observation required");
    const PRState st = pr_run(*model.kernel, theta, model.f0, model.weights, data, order);
    const double n = static_cast<double>(data.size());
    KnValue kn;
    kn.loglik = st.loglik;
    double direct = 0.0;
    for (std::size_t i = 0; i < st.log_predictives.size(); ++i) {
        const std::size_t idx = order.empty() ? i : order[i];
        direct += true_logm[idx] - st.log_predictives[i];
        kn.true_loglik += true_logm[idx];
    }
    kn.direct = direct / n;
    kn.via_loglik = -(kn.loglik - kn.true_loglik) / n;
    return kn;
}

KnValue kn_normalized(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      const LogDensityFn& true_logm) {
    const std::vector<double> cache = true_log_densities(data, true_logm);
    return kn_normalized(theta, data, model, cache);
}

std::vector<CurvePoint> likelihood_curve(const std::vector<std::vector<double>>& thetas, const Dataset& data,
                                         const PRModel& model, const LikelihoodConfig& cfg) {
    std::vector<CurvePoint> out(thetas.size());
    parallel_for(thetas.size(), [&](std::size_t t) {
        out[t].theta = thetas[t];
        out[t].prml = average(thetas[t], data, model, cfg, ObjectiveKind::prml, false, false).value;
        out[t].profile = average(thetas[t], data, model, cfg, ObjectiveKind::profile, false, false).value;
    });
    return out;
}

}  // namespace prml
