#pragma once

#include "prml/fdr.hpp"
#include "prml/observation.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace prml {

/// Generated observations plus the latent draws behind them.
struct Simulated {
    Dataset data;
    std::vector<double> latent;    ///< u_i, node-major when u has two coordinates
    std::vector<bool> nonnull;     ///< armix only: xi_i != 0
};

enum class DensityMix { beta26, beta1030, two_point, beta_point };
DensityMix parse_density_mix(const std::string& name);
const char* density_mix_name(DensityMix mix);

/// u ~ mix, y = u + sigma z.
Simulated gen_density(DensityMix mix, double sigma, std::size_t n, std::uint64_t seed);

/// y = 0.5 + 0.1 t_5.
Simulated gen_studentt(std::size_t n, std::uint64_t seed);
double studentt_log_density(double y);
double studentt_density(double y);

/// Random-intercept law for the regression studies; each has mean 0 and variance 4.
enum class InterceptLaw { gaussian, exponential, uniform2pt };
InterceptLaw parse_intercept_law(const std::string& name);
const char* intercept_law_name(InterceptLaw law);

struct RegressionTruth {
    std::vector<double> beta{2.0, 5.0};
    double sigma = 2.0;  ///< linear model only
};

/// x1 ~ N(0,1), x2 = J_i + 0.1 z with J_i ~ Bernoulli(1/2); y = U + x'beta + sigma e.
Simulated gen_lmm(std::size_t n, std::size_t r, InterceptLaw law, std::uint64_t seed, const RegressionTruth& truth = {});
/// Same design, y ~ Bernoulli(logistic(U + x'beta)).
Simulated gen_glmm(std::size_t n, std::size_t r, InterceptLaw law, std::uint64_t seed,
                   const RegressionTruth& truth = {});

/// Support box of the AR mixing law: sigma^2 in [0.5, 2], phi in [0.05, 0.95].
struct ArSupport {
    Interval sigma2{0.5, 2.0};
    Interval phi{0.05, 0.95};
};

/// Product of Beta(2,2) laws scaled onto the support box, as a density in u = (sigma^2, phi).
MixingDensity armix_mixing_density(const ArSupport& box = {});

/// xi_i = 0 with probability theta, else N(0,1); u_i from the product-beta law;
/// y_i ~ N(xi_i 1, S_u) with the kernel's S_u.
Simulated gen_armix(std::size_t n, std::size_t T, double theta, std::uint64_t seed, const ArSupport& box = {});

}  // namespace prml
