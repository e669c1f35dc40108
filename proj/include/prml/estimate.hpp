#pragma once

#include "prml/inference.hpp"
#include "prml/likelihood.hpp"

#include <span>

namespace prml {

/// The permutation-averaged PR log-likelihood as an optimizer objective.
/// Holds references to `data` and `model`; they must outlive the objective.
Objective make_objective(const Dataset& data, const PRModel& model, const LikelihoodConfig& cfg,
                         ObjectiveKind which);

/// Maximizes the averaged PRML or profile likelihood over `box`. Transforms
/// default to the kernel's own when opts.transforms is empty.
FitResult fit_pr(const Dataset& data, const PRModel& model, const Box& box, std::span<const double> init,
                 ObjectiveKind which, const LikelihoodConfig& cfg, FitOptions opts = {});

/// Final PR estimate of f at theta, averaged over the cfg permutations.
GridDensity pr_estimate(std::span<const double> theta, const Dataset& data, const PRModel& model,
                        const LikelihoodConfig& cfg);

}  // namespace prml
