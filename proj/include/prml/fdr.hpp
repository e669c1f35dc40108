#pragma once

#include "prml/grid.hpp"
#include "prml/kernels.hpp"
#include "prml/observation.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace prml {

struct TestDecision {
    std::size_t index = 0;
    double lfdr = 1.0;
    bool flagged = false;          ///< declared non-null
    std::optional<bool> truth;     ///< true when the unit is really non-null
};

struct TestMetrics {
    double fdr = 0.0;  ///< false discoveries / max(1, discoveries)
    double mp = 0.0;   ///< misclassified / n
    std::size_t discoveries = 0;
    std::size_t false_discoveries = 0;
    std::size_t missed = 0;
    std::size_t n = 0;
};

/// theta * int N(y | 0, S_u) f(u) du / m_f(y) for a kernel with a null component.
/// Throws DegenerateObservation(index) when the mixture density is zero.
double local_fdr(const Observation& obs, double theta_hat, const GridDensity& f_hat, const Kernel& kernel,
                 std::size_t index = 0);

/// local_fdr over a dataset, evaluated in parallel.
std::vector<double> local_fdrs(const Dataset& data, double theta_hat, const GridDensity& f_hat, const Kernel& kernel);

using MixingDensity = std::function<double(std::span<const double> u)>;

/// Bayes-oracle lfdr: the true mixing density is integrated on `support`,
/// normally a Legendre grid over its support box.
double oracle_lfdr(const Observation& obs, double theta_true, const MixingDensity& f_true, GridPtr support,
                   const Kernel& kernel);
std::vector<double> oracle_lfdrs(const Dataset& data, double theta_true, const MixingDensity& f_true,
                                 GridPtr support, const Kernel& kernel);

/// Flags lfdr <= cutoff. `truth`, if not empty, must have one entry per lfdr.
std::vector<TestDecision> classify(std::span<const double> lfdrs, double cutoff = 0.5,
                                   const std::vector<bool>& truth = {});

/// Throws ArgumentError if any decision lacks a truth label.
TestMetrics metrics(std::span<const TestDecision> decisions);

/// index,lfdr,flagged,truth (truth empty when unknown)
void write_decisions_csv(std::ostream& os, std::span<const TestDecision> decisions);
/// fdr,mp,discoveries,false_discoveries,missed,n
void write_metrics_csv(std::ostream& os, const TestMetrics& m);

}  // namespace prml
