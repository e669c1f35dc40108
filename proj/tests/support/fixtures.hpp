#pragma once

#include "prml/grid.hpp"
#include "prml/kernels.hpp"
#include "prml/observation.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace prml::testing {

/// A kernel together with a box of admissible theta, a mixing grid and a
/// sampler for observations of the right shape.
struct KernelCase {
    KernelPtr kernel;
    std::vector<double> theta_lo, theta_hi;
    GridPtr grid;
    std::function<Observation(std::mt19937_64&)> draw;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline KernelCase density_case(std::size_t J = 41) {
    return {gaussian_location_kernel(), {0.05}, {0.5},
            std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, J)),
            [](std::mt19937_64& rng) -> Observation { return Scalar{uniform(rng, -0.2, 1.2)}; }};
}

inline KernelCase linear_case(std::size_t J = 41) {
    return {linear_ri_kernel(2, 4), {1.0, 4.0, 1.0}, {3.0, 6.0, 3.0},
            std::make_shared<const Grid>(make_trapezoid_grid(-4.0, 4.0, J)),
            [](std::mt19937_64& rng) -> Observation {
                std::normal_distribution<double> z;
                const double u = uniform(rng, -2.0, 2.0);
                std::vector<double> x(8), y(4);
                const double J = z(rng);
                for (std::size_t j = 0; j < 4; ++j) {
                    x[2 * j] = z(rng);
                    x[2 * j + 1] = J + 0.1 * z(rng);
                    y[j] = u + 2.0 * x[2 * j] + 5.0 * x[2 * j + 1] + 2.0 * z(rng);
                }
                return Replicated(4, 2, x, y);
            }};
}

inline KernelCase logistic_case(std::size_t J = 41) {
    return {logistic_ri_kernel(2, 4), {-1.0, -1.0}, {3.0, 7.0},
            std::make_shared<const Grid>(make_trapezoid_grid(-8.0, 8.0, J)),
            [](std::mt19937_64& rng) -> Observation {
                std::normal_distribution<double> z;
                std::vector<double> x(8), y(4);
                const double J = z(rng);
                for (std::size_t j = 0; j < 4; ++j) {
                    x[2 * j] = z(rng);
                    x[2 * j + 1] = J + 0.1 * z(rng);
                    y[j] = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : 0.0;
                }
                return Replicated(4, 2, x, y);
            }};
}

inline KernelCase ar1_case(std::size_t T = 10, std::size_t J = 7) {
    return {ar1_mix_kernel(T), {0.2}, {0.9},
            std::make_shared<const Grid>(
                make_product_grid(make_legendre_grid(0.5, 2.0, J), make_legendre_grid(0.05, 0.95, J))),
            [T](std::mt19937_64& rng) -> Observation {
                std::normal_distribution<double> z;
                const double phi = uniform(rng, 0.1, 0.9);
                const double xi = uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : z(rng);
                std::vector<double> y(T);
                double prev = z(rng) / std::sqrt(1.0 - phi * phi);
                for (std::size_t t = 0; t < T; ++t) {
                    if (t > 0) prev = phi * prev + z(rng);
                    y[t] = xi + prev;
                }
                return Series(y);
            }};
}

inline std::vector<KernelCase> all_cases() { return {density_case(), linear_case(), logistic_case(), ar1_case()}; }

inline std::vector<double> draw_theta(const KernelCase& c, std::mt19937_64& rng) {
    std::vector<double> t(c.theta_lo.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = uniform(rng, c.theta_lo[k], c.theta_hi[k]);
    return t;
}

inline Dataset draw_data(const KernelCase& c, std::size_t n, std::mt19937_64& rng) {
    Dataset d;
    d.reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.push_back(c.draw(rng));
    return d;
}

/// Central differences with step h_k = rel * (1 + |theta_k|).
inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::span<const double> theta, double rel = 1e-5) {
    std::vector<double> g(theta.size()), t(theta.begin(), theta.end());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double h = rel * (1.0 + std::abs(theta[k]));
        t[k] = theta[k] + h;
        const double fp = f(t);
        t[k] = theta[k] - h;
        const double fm = f(t);
        t[k] = theta[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

}  // namespace prml::testing

namespace prml::testing {

/// p(y | theta, u) = c, for every y, u and theta.
class ConstantKernel final : public Kernel {
public:
    explicit ConstantKernel(double c) : c_(c) {}
    std::string name() const override { return "constant"; }
    std::size_t theta_dim() const override { return 1; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override { return {Transform::identity}; }
    bool has_gradient() const override { return true; }
    void log_density(std::span<const double>, const Observation&, std::span<const double>,
                     std::span<double> logp) const override {
        for (double& v : logp) v = std::log(c_);
    }
    void log_density_grad(std::span<const double> t, const Observation& o, std::span<const double> u,
                          std::span<double> logp, std::span<double> grad) const override {
        log_density(t, o, u, logp);
        for (double& g : grad) g = 0.0;
    }

private:
    double c_;
};

/// N(y | u, 1) regardless of theta.
class ThetaFreeKernel final : public Kernel {
public:
    std::string name() const override { return "theta_free"; }
    std::size_t theta_dim() const override { return 1; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override { return {Transform::identity}; }
    bool has_gradient() const override { return true; }
    void log_density(std::span<const double>, const Observation& obs, std::span<const double> u,
                     std::span<double> logp) const override {
        const double y = std::get<Scalar>(obs).y;
        for (std::size_t j = 0; j < logp.size(); ++j) logp[j] = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * (y - u[j]) * (y - u[j]);
    }
    void log_density_grad(std::span<const double> t, const Observation& o, std::span<const double> u,
                          std::span<double> logp, std::span<double> grad) const override {
        log_density(t, o, u, logp);
        for (double& g : grad) g = 0.0;
    }
};

/// Uniform on (u - theta, u + theta); zero outside, so whole rows can vanish.
class BoxcarKernel final : public Kernel {
public:
    std::string name() const override { return "boxcar"; }
    std::size_t theta_dim() const override { return 1; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override { return {Transform::log}; }
    void log_density(std::span<const double> theta, const Observation& obs, std::span<const double> u,
                     std::span<double> logp) const override {
        const double y = std::get<Scalar>(obs).y;
        for (std::size_t j = 0; j < logp.size(); ++j)
            logp[j] = std::abs(y - u[j]) < theta[0] ? -std::log(2 * theta[0]) : -HUGE_VAL;
    }
};

// Scales a kernel by c(obs) > 0, a function of the observation alone.
class ScaledKernel final : public Kernel {
public:
    ScaledKernel(KernelPtr base, std::function<double(const Observation&)> logc)
        : base_(std::move(base)), logc_(std::move(logc)) {}
    std::string name() const override { return base_->name(); }
    std::size_t theta_dim() const override { return base_->theta_dim(); }
    std::size_t u_dim() const override { return base_->u_dim(); }
    std::vector<Transform> transforms() const override { return base_->transforms(); }
    bool has_gradient() const override { return true; }
    void log_density(std::span<const double> t, const Observation& o, std::span<const double> u,
                     std::span<double> logp) const override {
        base_->log_density(t, o, u, logp);
        const double c = logc_(o);
        for (double& v : logp) v += c;
    }
    void log_density_grad(std::span<const double> t, const Observation& o, std::span<const double> u,
                          std::span<double> logp, std::span<double> grad) const override {
        base_->log_density_grad(t, o, u, logp, grad);
        const double c = logc_(o);
        for (double& v : logp) v += c;
    }

private:
    KernelPtr base_;
    std::function<double(const Observation&)> logc_;
};

}  // namespace prml::testing
