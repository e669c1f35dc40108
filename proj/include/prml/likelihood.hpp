#pragma once

#include "prml/grid.hpp"
#include "prml/kernels.hpp"
#include "prml/observation.hpp"
#include "prml/pr.hpp"
#include "prml/weights.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace prml {

/// Kernel, initial guess (which carries the grid) and weights of a PR fit.
struct PRModel {
    KernelPtr kernel;
    GridDensity f0;
    WeightSequence weights = WeightSequence::power();
};

enum class ObjectiveKind { prml, profile };
enum class DataOrder { as_given, permuted };

const char* objective_name(ObjectiveKind kind);
ObjectiveKind parse_objective(const std::string& name);

struct LikelihoodConfig {
    std::size_t permutations = 1;
    std::uint64_t seed = 0;
    /// as_given keeps the input order for the first permutation.
    DataOrder order = DataOrder::as_given;
};

struct LogLik {
    double value = 0.0;
    std::vector<double> grad;
};

/// log L_n(theta) = sum_i log m_{i-1,theta}(Y_i).
double prml_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                   std::span<const std::size_t> order = {});
LogLik prml_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                        std::span<const std::size_t> order = {});

/// sum_i log m_{n,theta}(Y_i) with the final PR estimate plugged in.
double profile_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      std::span<const std::size_t> order = {});
LogLik profile_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                           std::span<const std::size_t> order = {});

/// Visiting orders used for permutation averaging. Deterministic in cfg.seed.
std::vector<std::vector<std::size_t>> make_permutations(std::size_t n, const LikelihoodConfig& cfg);

/// Mean of the log-likelihood over cfg.permutations orderings. The
/// permutations are evaluated in parallel; the mean is summed in order so
/// the result does not depend on the thread count.
double averaged_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                       const LikelihoodConfig& cfg, ObjectiveKind which);
LogLik averaged_loglik_grad(std::span<const double> theta, const Dataset& data, const PRModel& model,
                            const LikelihoodConfig& cfg, ObjectiveKind which);

namespace reference {
/// Serial permutation average; same result as the parallel version.
double averaged_loglik(std::span<const double> theta, const Dataset& data, const PRModel& model,
                       const LikelihoodConfig& cfg, ObjectiveKind which);
}  // namespace reference

using LogDensityFn = std::function<double(const Observation&)>;

/// log m(Y_i) for every observation; the l_0n cache shared across theta.
std::vector<double> true_log_densities(const Dataset& data, const LogDensityFn& true_logm);

struct KnValue {
    double direct = 0.0;      ///< (1/n) sum_i [log m(Y_i) - log lambda_i]
    double via_loglik = 0.0;  ///< -(l_n - l_0n) / n
    double loglik = 0.0;      ///< l_n
    double true_loglik = 0.0; ///< l_0n
};

/// Normalized log-likelihood K_n(theta), computed both ways.
KnValue kn_normalized(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      std::span<const double> true_logm, std::span<const std::size_t> order = {});
KnValue kn_normalized(std::span<const double> theta, const Dataset& data, const PRModel& model,
                      const LogDensityFn& true_logm);

struct CurvePoint {
    std::vector<double> theta;
    double prml = 0.0;
    double profile = 0.0;
};

/// Both log-likelihoods over a list of theta values (permutation averaged per cfg).
std::vector<CurvePoint> likelihood_curve(const std::vector<std::vector<double>>& thetas, const Dataset& data,
                                         const PRModel& model, const LikelihoodConfig& cfg);

}  // namespace prml
