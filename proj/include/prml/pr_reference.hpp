#pragma once

// Literal, serial predictive recursion on the density scale. No log-space
// shift, no renormalization, no threading. Kept as a test oracle for the
// production path in pr.hpp and as the baseline in the benchmarks.

#include "prml/pr.hpp"

namespace prml::reference {

PRState pr_run(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
               const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order = {});

PRState pr_run_grad(const Kernel& kernel, std::span<const double> theta, const GridDensity& f0,
                    const WeightSequence& weights, const Dataset& data, std::span<const std::size_t> order = {});

}  // namespace prml::reference
