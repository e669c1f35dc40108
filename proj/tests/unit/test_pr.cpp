#include "doctest.h"
#include "fixtures.hpp"

#include "prml/errors.hpp"
#include "prml/parallel.hpp"
#include "prml/pr.hpp"
#include "prml/pr_reference.hpp"
#include "prml/weights.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace prml;
using namespace prml::testing;

namespace {

GridPtr unit_grid(std::size_t J = 101) { return std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, J)); }

double normal_pdf(double y, double mu, double sigma) {
    const double z = (y - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST_CASE("weight sequences") {
    const auto w = WeightSequence::power();
    CHECK(std::abs(w(1) - std::pow(2.0, -2.0 / 3.0)) < 1e-15);
    CHECK(std::abs(w(7) - 0.25) < 1e-15);
    CHECK(!w.length());
    CHECK_THROWS_AS(WeightSequence::power(0.5), ArgumentError);
    CHECK_THROWS_AS(WeightSequence::power(1.1), ArgumentError);
    CHECK_NOTHROW(WeightSequence::power(1.0));
    CHECK_THROWS_AS(w(0), ArgumentError);

    const auto dp = WeightSequence::dirichlet({1.0, 2.0, 3.0});
    CHECK(dp(1) == 0.5);
    CHECK(dp(3) == 0.25);
    CHECK(*dp.length() == 3);
    CHECK_THROWS_AS(dp(4), ArgumentError);
    CHECK_THROWS_AS(WeightSequence::dirichlet({1.0, 0.0}), ArgumentError);

    const auto grow = WeightSequence::dirichlet_growing(2.0);
    CHECK(grow(1) == doctest::Approx(1.0 / 3.0));
    CHECK(grow(3) == doctest::Approx(0.2));

    for (std::size_t i = 1; i < 5000; i += 37) {
        CHECK(w(i) > 0.0);
        CHECK(w(i) < 1.0);
        CHECK(grow(i) < 1.0);
    }
    CHECK(make_weights({"dp", 0.7, 1.0})(1) == 0.5);
    CHECK_THROWS_AS(make_weights({"harmonic"}), ArgumentError);
}

TEST_CASE("pr_step: constant kernel and small weights") {
    const auto grid = unit_grid(11);
    std::vector<double> v(11);
    for (std::size_t j = 0; j < 11; ++j) v[j] = 1.0 + grid->node(j)[0];
    const GridDensity f0(grid, v);
    const ConstantKernel k(0.37);
    const double theta[] = {1.0};
    const PRState st = pr_step(pr_init(f0), k, theta, Scalar{0.2}, 0.4);
    for (std::size_t j = 0; j < 11; ++j) CHECK(std::abs(st.f[j] - f0.values()[j]) < 1e-15);
    CHECK(std::abs(st.predictives()[0] - 0.37) < 1e-15);

    const auto g = gaussian_location_kernel();
    const double sigma[] = {0.1};
    const PRState tiny = pr_step(pr_init(f0), *g, sigma, Scalar{0.5}, 1e-14);
    for (std::size_t j = 0; j < 11; ++j) CHECK(std::abs(tiny.f[j] - f0.values()[j]) < 1e-12);

    CHECK_THROWS_AS(pr_step(pr_init(f0), *g, sigma, Scalar{0.5}, 0.0), ArgumentError);
    CHECK_THROWS_AS(pr_step(pr_init(f0), *g, sigma, Scalar{0.5}, 1.0), ArgumentError);
}

TEST_CASE("pr_step matches the update formula evaluated by hand") {
    const auto grid = unit_grid(101);
    const auto f0 = GridDensity::uniform(grid);
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.1};
    const PRState st = pr_step(pr_init(f0), *k, sigma, Scalar{0.5}, 0.5);

    double lambda = 0.0;
    for (std::size_t j = 0; j < 101; ++j) lambda += grid->weights()[j] * normal_pdf(0.5, grid->node(j)[0], 0.1);
    for (std::size_t j = 0; j < 101; ++j) {
        const double expected = 0.5 + 0.5 * normal_pdf(0.5, grid->node(j)[0], 0.1) / lambda;
        CHECK(std::abs(st.f[j] - expected) < 1e-12);
    }
    CHECK(std::abs(st.log_predictives[0] - std::log(lambda)) < 1e-13);
}

TEST_CASE("pr_run: empty data and a single observation") {
    const auto grid = unit_grid(51);
    const auto f0 = GridDensity::uniform(grid);
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.2};
    const PRState empty = pr_run(*k, sigma, f0, WeightSequence::power(), {});
    CHECK(empty.loglik == 0.0);
    CHECK(empty.f == std::vector<double>(f0.values().begin(), f0.values().end()));

    const Dataset one{Scalar{0.3}};
    const PRState st = pr_run(*k, sigma, f0, WeightSequence::power(), one);
    double m = 0.0;
    for (std::size_t j = 0; j < 51; ++j) m += grid->weights()[j] * normal_pdf(0.3, grid->node(j)[0], 0.2);
    CHECK(std::abs(st.loglik - std::log(m)) < 1e-13);
}

TEST_CASE("one PR step with w = 1/(1 + alpha0) is the Polya-urn posterior mean") {
    std::mt19937_64 rng(99);
    for (const auto& c : all_cases()) {
        CAPTURE(c.kernel->name());
        for (int trial = 0; trial < 10; ++trial) {
            const double alpha0 = uniform(rng, 0.1, 10.0);
            const auto theta = draw_theta(c, rng);
            const Observation y = c.draw(rng);
            std::vector<double> v(c.grid->size());
            for (double& x : v) x = uniform(rng, 0.2, 2.0);
            const GridDensity f0(c.grid, v);
            const PRState st =
                pr_run(*c.kernel, theta, f0, WeightSequence::dirichlet_growing(alpha0), Dataset{y});

            // dF1 = alpha/(alpha+1) dF0 + 1/(alpha+1) p(Y|u) dF0 / m0(Y)
            const auto a = c.grid->weights();
            std::vector<double> p(v.size());
            double m0 = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                p[j] = c.kernel->density(theta, c.grid->node(j), y);
                m0 += a[j] * p[j] * f0.values()[j];
            }
            for (std::size_t j = 0; j < v.size(); ++j) {
                const double f = f0.values()[j];
                const double urn = alpha0 / (alpha0 + 1.0) * f + 1.0 / (alpha0 + 1.0) * p[j] * f / m0;
                CHECK(std::abs(st.f[j] - urn) <= 1e-12 * std::max(1.0, urn));
            }
        }
    }
}

TEST_CASE("normalization, positivity and gradient mass along a pass") {
    std::mt19937_64 rng(17);
    for (const auto& c : all_cases()) {
        CAPTURE(c.kernel->name());
        const auto theta = draw_theta(c, rng);
        const Dataset data = draw_data(c, 60, rng);
        PRState st = pr_init(GridDensity::uniform(c.grid), c.kernel->theta_dim());
        const auto w = WeightSequence::power();
        for (std::size_t i = 0; i < data.size(); ++i) {
            st = pr_step(std::move(st), *c.kernel, theta, data[i], w(i + 1), i);
            CHECK(std::abs(c.grid->integrate(st.f) - 1.0) < 1e-12);
            for (double v : st.f) CHECK(v > 0.0);
            for (std::size_t k = 0; k < st.theta_dim; ++k) {
                double mass = 0.0;
                for (std::size_t j = 0; j < c.grid->size(); ++j) mass += c.grid->weights()[j] * st.grad_f[j * st.theta_dim + k];
                CHECK(std::abs(mass) < 1e-6);
            }
        }
        CHECK(st.max_drift <= 1e-8);
    }
}

TEST_CASE("pr_run_grad: theta-free kernel has zero gradient") {
    const auto grid = unit_grid(41);
    const ThetaFreeKernel k;
    const double theta[] = {0.3};
    const Dataset data{Scalar{0.1}, Scalar{0.7}, Scalar{0.4}};
    const PRState st = pr_run_grad(k, theta, GridDensity::uniform(grid), WeightSequence::power(), data);
    CHECK(st.grad_loglik[0] == 0.0);
}

TEST_CASE("pr_run_grad: first step gradient") {
    const auto grid = unit_grid(41);
    const auto f0 = GridDensity::uniform(grid);
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.15};
    const Observation y = Scalar{0.62};
    const PRState st = pr_run_grad(*k, sigma, f0, WeightSequence::power(), Dataset{y});
    double num = 0.0, lam = 0.0;
    for (std::size_t j = 0; j < 41; ++j) {
        const double a = grid->weights()[j] * f0.values()[j];
        num += a * k->density_gradient(sigma, grid->node(j), y)[0];
        lam += a * k->density(sigma, grid->node(j), y);
    }
    CHECK(std::abs(st.grad_loglik[0] - num / lam) < 1e-12 * std::abs(num / lam));
}

TEST_CASE("pr_run_grad matches central differences of the log marginal likelihood") {
    for (const auto& c : all_cases()) {
        CAPTURE(c.kernel->name());
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            std::mt19937_64 rng(seed);
            const auto theta = draw_theta(c, rng);
            const Dataset data = draw_data(c, 25, rng);
            const auto f0 = GridDensity::uniform(c.grid);
            const auto w = WeightSequence::power();
            const PRState st = pr_run_grad(*c.kernel, theta, f0, w, data);
            const auto fd = central_difference(
                [&](std::span<const double> t) { return pr_run(*c.kernel, t, f0, w, data).loglik; }, theta);
            for (std::size_t k = 0; k < fd.size(); ++k) CHECK(rel_err(st.grad_loglik[k], fd[k]) < 1e-5);
            CHECK(std::abs(st.loglik - pr_run(*c.kernel, theta, f0, w, data).loglik) < 1e-12 * std::abs(st.loglik));
        }
    }
}

TEST_CASE("log-space recursion agrees with the literal reference recursion") {
    std::mt19937_64 rng(8);
    for (const auto& c : {density_case(), linear_case(), logistic_case(), ar1_case(4, 5)}) {
        CAPTURE(c.kernel->name());
        const auto theta = draw_theta(c, rng);
        const Dataset data = draw_data(c, 30, rng);
        const auto f0 = GridDensity::uniform(c.grid);
        const auto w = WeightSequence::power(0.8);
        const PRState fast = pr_run_grad(*c.kernel, theta, f0, w, data);
        const PRState ref = reference::pr_run_grad(*c.kernel, theta, f0, w, data);
        CHECK(std::abs(fast.loglik - ref.loglik) < 1e-9 * std::max(1.0, std::abs(ref.loglik)));
        for (std::size_t j = 0; j < fast.f.size(); ++j) CHECK(std::abs(fast.f[j] - ref.f[j]) < 1e-9 * std::max(1.0, ref.f[j]));
        for (std::size_t k = 0; k < theta.size(); ++k)
            CHECK(rel_err(fast.grad_loglik[k], ref.grad_loglik[k]) < 1e-9);
    }
}

TEST_CASE("visiting order matters for a single pass") {
    const auto c = density_case();
    std::mt19937_64 rng(4);
    const Dataset data = draw_data(c, 20, rng);
    const double sigma[] = {0.1};
    const auto f0 = GridDensity::uniform(c.grid);
    std::vector<std::size_t> rev(20);
    for (std::size_t i = 0; i < 20; ++i) rev[i] = 19 - i;
    const double a = pr_run(*c.kernel, sigma, f0, WeightSequence::power(), data).loglik;
    const double b = pr_run(*c.kernel, sigma, f0, WeightSequence::power(), data, rev).loglik;
    CHECK(a != b);

    Dataset reversed(data.rbegin(), data.rend());
    const double b2 = pr_run(*c.kernel, sigma, f0, WeightSequence::power(), reversed).loglik;
    CHECK(b == b2);
}

TEST_CASE("mixture density") {
    const auto grid = unit_grid(101);
    const ConstantKernel kc(0.8);
    const double theta[] = {1.0};
    CHECK(std::abs(mixture_density(pr_init(GridDensity::uniform(grid)), kc, theta, Scalar{0.0}) - 0.8) < 1e-15);

    // near-delta: all mass on one interior node
    std::vector<double> v(101, 0.0);
    v[30] = 1.0;
    const GridDensity delta(grid, v);
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.1};
    const double u0[] = {grid->node(30)[0]};
    CHECK(std::abs(mixture_density(pr_init(delta), *k, sigma, Scalar{0.35}) - k->density(sigma, u0, Scalar{0.35})) <
          1e-13);

    // grid refinement; Legendre so the comparison is not dominated by trapezoid endpoint error
    for (double s : {0.05, 0.1, 0.3}) {
        const double sg[] = {s};
        const auto coarse = pr_init(GridDensity::uniform(std::make_shared<const Grid>(make_legendre_grid(0, 1, 201))));
        const auto fine = pr_init(GridDensity::uniform(std::make_shared<const Grid>(make_legendre_grid(0, 1, 2001))));
        for (double y : {-0.1, 0.2, 0.5, 0.97})
            CHECK(std::abs(mixture_density(coarse, *k, sg, Scalar{y}) - mixture_density(fine, *k, sg, Scalar{y})) < 1e-6);
    }
}

TEST_CASE("degenerate observations are reported with their data index") {
    const auto grid = unit_grid(21);
    const BoxcarKernel k;
    const double theta[] = {0.2};
    const Dataset data{Scalar{0.5}, Scalar{0.4}, Scalar{3.0}, Scalar{0.1}};
    try {
        pr_run(k, theta, GridDensity::uniform(grid), WeightSequence::power(), data);
        FAIL("expected a degenerate observation");
    } catch (const DegenerateObservation& e) {
        CHECK(e.index() == 2);
    }
    const std::vector<std::size_t> order{3, 2, 1, 0};
    try {
        pr_run(k, theta, GridDensity::uniform(grid), WeightSequence::power(), data, order);
        FAIL("expected a degenerate observation");
    } catch (const DegenerateObservation& e) {
        CHECK(e.index() == 2);
    }
    CHECK_THROWS_AS(pr_run_grad(k, theta, GridDensity::uniform(grid), WeightSequence::power(), data), CapabilityError);
}

TEST_CASE("parallel kernel rows agree with serial rows bit for bit") {
    const auto grid = std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, 1001));
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.07};
    std::mt19937_64 rng(1);
    const Dataset data = draw_data(density_case(), 50, rng);
    set_workers(1);
    const PRState one = pr_run_grad(*k, sigma, GridDensity::uniform(grid), WeightSequence::power(), data);
    set_workers(4);
    const PRState four = pr_run_grad(*k, sigma, GridDensity::uniform(grid), WeightSequence::power(), data);
    set_workers(0);
    CHECK(one.loglik == four.loglik);
    CHECK(one.f == four.f);
    CHECK(one.grad_loglik == four.grad_loglik);
}

TEST_CASE("finite weight schedule must cover the data") {
    const auto grid = unit_grid(11);
    const auto k = gaussian_location_kernel();
    const double sigma[] = {0.2};
    const Dataset data{Scalar{0.1}, Scalar{0.2}, Scalar{0.3}};
    CHECK_THROWS_AS(pr_run(*k, sigma, GridDensity::uniform(grid), WeightSequence::dirichlet({1.0, 2.0}), data),
                    ArgumentError);
}
