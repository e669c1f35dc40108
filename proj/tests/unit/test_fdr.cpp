#include "doctest.h"
#include "fixtures.hpp"

#include "prml/errors.hpp"
#include "prml/fdr.hpp"
#include "prml/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace prml;
using namespace prml::testing;

namespace {

// N(y | 0, [[s11, s12], [s12, s22]]) written out
double bivariate_normal(double y1, double y2, double s11, double s12, double s22) {
    const double det = s11 * s22 - s12 * s12;
    const double q = (s22 * y1 * y1 - 2.0 * s12 * y1 * y2 + s11 * y2 * y2) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

GridPtr two_point_grid() {
    return std::make_shared<const Grid>(std::vector<double>{1.0, 0.3, 0.5, 0.6}, std::vector<double>{0.5, 0.5},
                                        std::vector<Interval>{{0.5, 2.0}, {0.05, 0.95}});
}

GridDensity random_density(GridPtr grid, std::mt19937_64& rng) {
    std::vector<double> v(grid->size());
    for (double& x : v) x = uniform(rng, 0.1, 2.0);
    return GridDensity(std::move(grid), std::move(v));
}

}  // namespace

TEST_CASE("local_fdr: two-point grid with T = 2 by hand") {
    const auto grid = two_point_grid();
    const GridDensity f(grid, {0.6, 1.4});
    const auto k = ar1_mix_kernel(2);
    const double y1 = 0.3, y2 = -0.8;
    const Observation obs = Series({y1, y2});
    for (double th : {0.1, 0.5, 0.9}) {
        double num = 0.0, den = 0.0;
        const double s2[] = {1.0, 0.5}, phi[] = {0.3, 0.6}, fv[] = {0.6, 1.4};
        for (int j = 0; j < 2; ++j) {
            const double v = s2[j] / (1.0 - phi[j]);
            const double n0 = bivariate_normal(y1, y2, v, v * phi[j], v);
            const double n1 = bivariate_normal(y1, y2, v + 1.0, v * phi[j] + 1.0, v + 1.0);
            num += 0.5 * fv[j] * th * n0;
            den += 0.5 * fv[j] * (th * n0 + (1.0 - th) * n1);
        }
        CHECK(std::abs(local_fdr(obs, th, f, *k) - num / den) < 1e-12);
    }
}

TEST_CASE("local_fdr: pure null and pure alternative priors") {
    const auto c = ar1_case(10, 5);
    std::mt19937_64 rng(2);
    const GridDensity f = random_density(c.grid, rng);
    for (int i = 0; i < 20; ++i) {
        const Observation obs = c.draw(rng);
        CHECK(local_fdr(obs, 1.0, f, *c.kernel) == 1.0);
        CHECK(local_fdr(obs, 0.0, f, *c.kernel) == 0.0);
    }
    CHECK_THROWS_AS(local_fdr(c.draw(rng), 1.2, f, *c.kernel), DomainError);
    const auto g = gaussian_location_kernel();
    const auto unit = std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, 11));
    CHECK_THROWS_AS(local_fdr(Scalar{0.1}, 0.5, GridDensity::uniform(unit), *g), CapabilityError);
}

TEST_CASE("lfdr is nondecreasing in theta with f fixed") {
    const auto c = ar1_case(10, 5);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const GridDensity f = random_density(c.grid, rng);
        const Observation obs = c.draw(rng);
        double a = uniform(rng, 0.0, 1.0), b = uniform(rng, 0.0, 1.0);
        if (a > b) std::swap(a, b);
        const double la = local_fdr(obs, a, f, *c.kernel), lb = local_fdr(obs, b, f, *c.kernel);
        CHECK(la <= lb);
        CHECK(la >= 0.0);
        CHECK(lb <= 1.0);
    }
}

TEST_CASE("oracle equals plug-in when the plug-in is the truth") {
    const auto c = ar1_case(10, 7);
    std::mt19937_64 rng(5);
    // beta(2,2) x beta(2,2) on the support box, written as a function of u
    const MixingDensity f_true = [](std::span<const double> u) {
        const double s = (u[0] - 0.5) / 1.5, p = (u[1] - 0.05) / 0.9;
        return 36.0 * s * (1.0 - s) * p * (1.0 - p) / (1.5 * 0.9);
    };
    std::vector<double> v(c.grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f_true(c.grid->node(j));
    const GridDensity f_hat(c.grid, v);
    Dataset data;
    for (int i = 0; i < 50; ++i) data.push_back(c.draw(rng));
    const double theta = 0.75;
    const auto plug = local_fdrs(data, theta, f_hat, *c.kernel);
    const auto oracle = oracle_lfdrs(data, theta, f_true, c.grid, *c.kernel);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(std::abs(plug[i] - oracle[i]) < 1e-8);
        CHECK(std::abs(oracle_lfdr(data[i], theta, f_true, c.grid, *c.kernel) - oracle[i]) < 1e-15);
    }
    const auto dp = classify(plug), doracle = classify(oracle);
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(dp[i].flagged == doracle[i].flagged);

    set_workers(1);
    const auto one = local_fdrs(data, theta, f_hat, *c.kernel);
    set_workers(3);
    const auto three = local_fdrs(data, theta, f_hat, *c.kernel);
    set_workers(0);
    CHECK(one == three);
}

TEST_CASE("classify") {
    const std::vector<double> ones(5, 1.0);
    for (const auto& d : classify(ones)) CHECK(!d.flagged);
    const double edge[] = {0.5};
    CHECK(classify(edge)[0].flagged);
    const double mixed[] = {0.2, 0.6, 0.5};
    const auto d = classify(mixed, 0.5);
    CHECK(d[0].flagged);
    CHECK(!d[1].flagged);
    CHECK(d[2].flagged);
    CHECK(d[1].index == 1);
    CHECK(!d[0].truth);
    CHECK_THROWS_AS(classify(mixed, 0.0), ArgumentError);
    CHECK_THROWS_AS(classify(mixed, 0.5, {true}), ArgumentError);
}

TEST_CASE("metrics") {
    const double l[] = {0.1, 0.9, 0.2, 0.8};
    const TestMetrics perfect = metrics(classify(l, 0.5, {true, false, true, false}));
    CHECK(perfect.fdr == 0.0);
    CHECK(perfect.mp == 0.0);

    const double none[] = {0.9, 0.7, 0.8, 0.6};
    const TestMetrics zero = metrics(classify(none, 0.5, {true, false, true, false}));
    CHECK(zero.discoveries == 0);
    CHECK(zero.fdr == 0.0);
    CHECK(zero.mp == 0.5);

    // one false discovery out of two, one miss
    const double mix[] = {0.1, 0.2, 0.9, 0.9};
    const TestMetrics m = metrics(classify(mix, 0.5, {true, false, true, false}));
    CHECK(m.fdr == 0.5);
    CHECK(m.mp == 0.5);
    CHECK(m.missed == 1);

    CHECK_THROWS_AS(metrics(classify(mix)), ArgumentError);

    // order of units does not matter
    std::mt19937_64 rng(4);
    std::vector<double> lf(100);
    std::vector<bool> tr(100);
    for (std::size_t i = 0; i < 100; ++i) {
        lf[i] = uniform(rng, 0.0, 1.0);
        tr[i] = uniform(rng, 0.0, 1.0) < 0.3;
    }
    const TestMetrics a = metrics(classify(lf, 0.5, tr));
    std::vector<std::size_t> p(100);
    for (std::size_t i = 0; i < 100; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng);
    std::vector<double> lf2(100);
    std::vector<bool> tr2(100);
    for (std::size_t i = 0; i < 100; ++i) {
        lf2[i] = lf[p[i]];
        tr2[i] = tr[p[i]];
    }
    const TestMetrics b = metrics(classify(lf2, 0.5, tr2));
    CHECK(a.fdr == b.fdr);
    CHECK(a.mp == b.mp);
    CHECK(a.fdr >= 0.0);
    CHECK(a.fdr <= 1.0);
}

TEST_CASE("decision and metric csv") {
    const double l[] = {0.25, 0.75};
    std::ostringstream os;
    write_decisions_csv(os, classify(l, 0.5, {true, true}));
    CHECK(os.str() == "index,lfdr,flagged,truth\n0,0.25,1,1\n1,0.75,0,1\n");
    std::ostringstream nt;
    write_decisions_csv(nt, classify(l));
    CHECK(nt.str() == "index,lfdr,flagged,truth\n0,0.25,1,\n1,0.75,0,\n");
    std::ostringstream ms;
    write_metrics_csv(ms, metrics(classify(l, 0.5, {false, true})));
    CHECK(ms.str() == "fdr,mp,discoveries,false_discoveries,missed,n\n1,1,1,1,1,2\n");
}
