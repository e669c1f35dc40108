#include "prml/fdr.hpp"

#include "prml/errors.hpp"
#include "prml/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace prml {

double local_fdr(const Observation& obs, double theta_hat, const GridDensity& f_hat, const Kernel& kernel,
                 std::size_t index) {
    if (!(theta_hat >= 0.0 && theta_hat <= 1.0)) throw DomainError("local_fdr: theta must lie in [0,1]");
    if (!kernel.has_null()) throw CapabilityError(kernel.name() + " kernel has no null component");
    const Grid& grid = f_hat.grid();
    const std::size_t J = grid.size();
    const double th[] = {theta_hat};
    std::vector<double> null_log(J), full_log(J);
    kernel.null_log_density(th, obs, grid.nodes(), null_log);
    kernel.log_density(th, obs, grid.nodes(), full_log);

    // common shift so tiny densities at long T do not underflow
    const double shift = *std::max_element(full_log.begin(), full_log.end());
    if (!std::isfinite(shift)) throw DegenerateObservation(index, "mixture density is zero");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double a = grid.weights()[j] * f_hat.values()[j];
        num += a * std::exp(null_log[j] - shift);
        den += a * std::exp(full_log[j] - shift);
    }
    if (!(den > 0.0)) throw DegenerateObservation(index, "mixture density is zero");
    const double r = theta_hat * num / den;
    if (r > 1.0 + 1e-12) throw NumericalError("local_fdr: ratio " + std::to_string(r) + " exceeds one");
    return std::min(r, 1.0);
}

std::vector<double> local_fdrs(const Dataset& data, double theta_hat, const GridDensity& f_hat, const Kernel& kernel) {
    std::vector<double> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) { out[i] = local_fdr(data[i], theta_hat, f_hat, kernel, i); });
    return out;
}

namespace {

GridDensity tabulate(const MixingDensity& f, GridPtr grid) {
    std::vector<double> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid->node(j));
    return GridDensity(std::move(grid), std::move(v));
}

}  // namespace

double oracle_lfdr(const Observation& obs, double theta_true, const MixingDensity& f_true, GridPtr support,
                   const Kernel& kernel) {
    return local_fdr(obs, theta_true, tabulate(f_true, std::move(support)), kernel);
}

std::vector<double> oracle_lfdrs(const Dataset& data, double theta_true, const MixingDensity& f_true,
                                 GridPtr support, const Kernel& kernel) {
    return local_fdrs(data, theta_true, tabulate(f_true, std::move(support)), kernel);
}

std::vector<TestDecision> classify(std::span<const double> lfdrs, double cutoff, const std::vector<bool>& truth) {
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ArgumentError("classify: cutoff must lie in (0,1)");
    if (!truth.empty() && truth.size() != lfdrs.size())
        throw ArgumentError("classify: " + std::to_string(truth.size()) + " truth labels for " +
                            std::to_string(lfdrs.size()) + " lfdr values");
    std::vector<TestDecision> out(lfdrs.size());
    for (std::size_t i = 0; i < lfdrs.size(); ++i) {
        out[i].index = i;
        out[i].lfdr = lfdrs[i];
        out[i].flagged = lfdrs[i] <= cutoff;
        if (!truth.empty()) out[i].truth = truth[i];
    }
    return out;
}

TestMetrics metrics(std::span<const TestDecision> decisions) {
    TestMetrics m;
    m.n = decisions.size();
    for (const auto& d : decisions) {
        if (!d.truth) throw ArgumentError("metrics: decision " + std::to_string(d.index) + " has no truth label");
        if (d.flagged) {
            ++m.discoveries;
            if (!*d.truth) ++m.false_discoveries;
        } else if (*d.truth) {
            ++m.missed;
        }
    }
    m.fdr = static_cast<double>(m.false_discoveries) / static_cast<double>(std::max<std::size_t>(1, m.discoveries));
    m.mp = m.n == 0 ? 0.0 : static_cast<double>(m.false_discoveries + m.missed) / static_cast<double>(m.n);
    return m;
}

void write_decisions_csv(std::ostream& os, std::span<const TestDecision> decisions) {
    os << "index,lfdr,flagged,truth\n" << std::setprecision(17);
    for (const auto& d : decisions) {
        os << d.index << ',' << d.lfdr << ',' << (d.flagged ? 1 : 0) << ',';
        if (d.truth) os << (*d.truth ? 1 : 0);
        os << '\n';
    }
}

void write_metrics_csv(std::ostream& os, const TestMetrics& m) {
    os << "fdr,mp,discoveries,false_discoveries,missed,n\n" << std::setprecision(17);
    os << m.fdr << ',' << m.mp << ',' << m.discoveries << ',' << m.false_discoveries << ',' << m.missed << ',' << m.n
       << '\n';
}

}  // namespace prml
