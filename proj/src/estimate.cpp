#include "prml/estimate.hpp"

#include "prml/parallel.hpp"

#include <algorithm>

namespace prml {

Objective make_objective(const Dataset& data, const PRModel& model, const LikelihoodConfig& cfg,
                         ObjectiveKind which) {
    Objective o;
    o.value = [&data, &model, cfg, which](std::span<const double> t) {
        return averaged_loglik(t, data, model, cfg, which);
    };
    if (model.kernel->has_gradient())
        o.value_grad = [&data, &model, cfg, which](std::span<const double> t, std::span<double> g) {
            const LogLik l = averaged_loglik_grad(t, data, model, cfg, which);
            std::copy(l.grad.begin(), l.grad.end(), g.begin());
            return l.value;
        };
    return o;
}

FitResult fit_pr(const Dataset& data, const PRModel& model, const Box& box, std::span<const double> init,
                 ObjectiveKind which, const LikelihoodConfig& cfg, FitOptions opts) {
    if (opts.transforms.empty()) opts.transforms = model.kernel->transforms();
    opts.objective_label = objective_name(which);
    opts.permutations = cfg.permutations;
    return fit(make_objective(data, model, cfg, which), box, init, opts);
}

GridDensity pr_estimate(std::span<const double> theta, const Dataset& data, const PRModel& model,
                        const LikelihoodConfig& cfg) {
    const auto perms = make_permutations(data.size(), cfg);
    std::vector<std::vector<double>> fs(perms.size());
    parallel_for(perms.size(), [&](std::size_t p) {
        fs[p] = pr_run(*model.kernel, theta, model.f0, model.weights, data, perms[p]).f;
    });
    std::vector<double> mean(fs[0].size(), 0.0);
    for (const auto& f : fs)
        for (std::size_t j = 0; j < f.size(); ++j) mean[j] += f[j];
    for (double& v : mean) v /= static_cast<double>(fs.size());
    return GridDensity(model.f0.grid_ptr(), std::move(mean));
}

}  // namespace prml
