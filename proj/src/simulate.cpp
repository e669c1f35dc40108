#include "prml/simulate.hpp"

#include "prml/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace prml {

namespace {

using Rng = std::mt19937_64;

double draw_beta(Rng& rng, double a, double b) {
    std::gamma_distribution<double> ga(a), gb(b);
    const double x = ga(rng), y = gb(rng);
    return x / (x + y);
}

double draw_intercept(Rng& rng, InterceptLaw law) {
    switch (law) {
        case InterceptLaw::gaussian: return std::normal_distribution<double>(0.0, 2.0)(rng);
        case InterceptLaw::exponential: return std::exponential_distribution<double>(0.5)(rng) - 2.0;
        case InterceptLaw::uniform2pt: return std::bernoulli_distribution(0.5)(rng) ? 2.0 : -2.0;
    }
    throw ArgumentError("unknown intercept law");
}

// Shared covariate design and intercepts; `respond` turns a linear predictor into y.
template <class Respond>
Simulated gen_regression(std::size_t n, std::size_t r, InterceptLaw law, std::uint64_t seed,
                         const RegressionTruth& truth, Respond respond) {
    if (truth.beta.size() != 2) throw ArgumentError("regression generator: beta must have two components");
    if (r == 0) throw ArgumentError("regression generator: r must be positive");
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::bernoulli_distribution half(0.5);
    Simulated out;
    out.data.reserve(n);
    out.latent.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = draw_intercept(rng, law);
        const double Ji = half(rng) ? 1.0 : 0.0;
        std::vector<double> x(2 * r), y(r);
        for (std::size_t j = 0; j < r; ++j) {
            x[2 * j] = z(rng);
            x[2 * j + 1] = Ji + 0.1 * z(rng);
            const double eta = u + truth.beta[0] * x[2 * j] + truth.beta[1] * x[2 * j + 1];
            y[j] = respond(rng, eta);
        }
        out.data.push_back(Replicated(r, 2, std::move(x), std::move(y)));
        out.latent.push_back(u);
    }
    return out;
}

}  // namespace

DensityMix parse_density_mix(const std::string& name) {
    if (name == "beta26") return DensityMix::beta26;
    if (name == "beta1030") return DensityMix::beta1030;
    if (name == "two_point") return DensityMix::two_point;
    if (name == "beta_point") return DensityMix::beta_point;
    throw ArgumentError("unknown mixing distribution '" + name + "' (beta26, beta1030, two_point, beta_point)");
}

const char* density_mix_name(DensityMix mix) {
    switch (mix) {
        case DensityMix::beta26: return "beta26";
        case DensityMix::beta1030: return "beta1030";
        case DensityMix::two_point: return "two_point";
        case DensityMix::beta_point: return "beta_point";
    }
    return "?";
}

Simulated gen_density(DensityMix mix, double sigma, std::size_t n, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("gen_density: sigma must be >= 0");
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::bernoulli_distribution half(0.5);
    Simulated out;
    out.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = 0.0;
        switch (mix) {
            case DensityMix::beta26: u = draw_beta(rng, 2.0, 6.0); break;
            case DensityMix::beta1030: u = draw_beta(rng, 10.0, 30.0); break;
            case DensityMix::two_point: u = half(rng) ? 0.75 : 0.25; break;
            case DensityMix::beta_point: u = half(rng) ? 0.75 : draw_beta(rng, 2.0, 6.0); break;
        }
        out.latent.push_back(u);
        out.data.push_back(Scalar{u + sigma * z(rng)});
    }
    return out;
}

Simulated gen_studentt(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::student_t_distribution<double> t5(5.0);
    Simulated out;
    out.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.data.push_back(Scalar{0.5 + 0.1 * t5(rng)});
    return out;
}

double studentt_density(double y) {
    return boost::math::pdf(boost::math::students_t(5.0), (y - 0.5) / 0.1) / 0.1;
}

double studentt_log_density(double y) {
    // log of the t5 density written out so the far tails do not underflow
    const double z = (y - 0.5) / 0.1;
    return std::lgamma(3.0) - std::lgamma(2.5) - 0.5 * std::log(5.0 * std::numbers::pi) - 3.0 * std::log1p(z * z / 5.0) -
           std::log(0.1);
}

InterceptLaw parse_intercept_law(const std::string& name) {
    if (name == "gaussian") return InterceptLaw::gaussian;
    if (name == "exponential") return InterceptLaw::exponential;
    if (name == "uniform2pt" || name == "uniform") return InterceptLaw::uniform2pt;
    throw ArgumentError("unknown mixing distribution '" + name + "' (gaussian, exponential, uniform2pt)");
}

const char* intercept_law_name(InterceptLaw law) {
    switch (law) {
        case InterceptLaw::gaussian: return "gaussian";
        case InterceptLaw::exponential: return "exponential";
        case InterceptLaw::uniform2pt: return "uniform2pt";
    }
    return "?";
}

Simulated gen_lmm(std::size_t n, std::size_t r, InterceptLaw law, std::uint64_t seed, const RegressionTruth& truth) {
    if (!(truth.sigma > 0.0)) throw DomainError("gen_lmm: sigma must be positive");
    return gen_regression(n, r, law, seed, truth, [s = truth.sigma](Rng& rng, double eta) {
        return eta + s * std::normal_distribution<double>()(rng);
    });
}

Simulated gen_glmm(std::size_t n, std::size_t r, InterceptLaw law, std::uint64_t seed,
                   const RegressionTruth& truth) {
    return gen_regression(n, r, law, seed, truth, [](Rng& rng, double eta) {
        return std::bernoulli_distribution(1.0 / (1.0 + std::exp(-eta)))(rng) ? 1.0 : 0.0;
    });
}

MixingDensity armix_mixing_density(const ArSupport& box) {
    return [box](std::span<const double> u) {
        if (!box.sigma2.contains(u[0]) || !box.phi.contains(u[1])) return 0.0;
        const double s = (u[0] - box.sigma2.lo) / box.sigma2.length();
        const double p = (u[1] - box.phi.lo) / box.phi.length();
        return 36.0 * s * (1.0 - s) * p * (1.0 - p) / (box.sigma2.length() * box.phi.length());
    };
}

Simulated gen_armix(std::size_t n, std::size_t T, double theta, std::uint64_t seed, const ArSupport& box) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("gen_armix: theta must lie in [0,1]");
    if (T < 2) throw ArgumentError("gen_armix: T must be at least 2");
    if (box.phi.lo <= -1.0 || box.phi.hi >= 1.0 || box.sigma2.lo <= 0.0)
        throw DomainError("gen_armix: support box outside the AR(1) domain");
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::bernoulli_distribution null(theta);
    Simulated out;
    out.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_null = null(rng);
        const double xi = is_null ? 0.0 : z(rng);
        const double sigma2 = box.sigma2.lo + box.sigma2.length() * draw_beta(rng, 2.0, 2.0);
        const double phi = box.phi.lo + box.phi.length() * draw_beta(rng, 2.0, 2.0);
        // stationary AR(1) with marginal variance sigma2 / (1 - phi)
        const double s = sigma2 / (1.0 - phi);
        const double innov = std::sqrt(s * (1.0 - phi * phi));
        std::vector<double> y(T);
        double e = std::sqrt(s) * z(rng);
        for (std::size_t t = 0; t < T; ++t) {
            if (t > 0) e = phi * e + innov * z(rng);
            y[t] = xi + e;
        }
        out.data.push_back(Series(std::move(y)));
        out.latent.push_back(sigma2);
        out.latent.push_back(phi);
        out.nonnull.push_back(!is_null);
    }
    return out;
}

}  // namespace prml
