#include "doctest.h"

#include "prml/errors.hpp"
#include "prml/grid.hpp"
#include "prml/simulate.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

using namespace prml;

namespace {

std::vector<double> ys(const Dataset& d) {
    std::vector<double> out;
    for (const auto& o : d) out.push_back(std::get<Scalar>(o).y);
    return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

bool same_data(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].index() != b[i].index()) return false;
        if (const auto* s = std::get_if<Scalar>(&a[i])) {
            if (s->y != std::get<Scalar>(b[i]).y) return false;
        } else if (const auto* r = std::get_if<Replicated>(&a[i])) {
            if (r->x != std::get<Replicated>(b[i]).x || r->y != std::get<Replicated>(b[i]).y) return false;
        } else if (std::get<Series>(a[i]).y != std::get<Series>(b[i]).y) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("gen_density") {
    const Simulated two = gen_density(DensityMix::two_point, 0.0, 200, 1);
    for (double y : ys(two.data)) CHECK((y == 0.25 || y == 0.75));

    const Simulated b = gen_density(DensityMix::beta26, 0.1, 100000, 2);
    // Beta(2,6): mean 1/4, variance 2*6 / (8^2 * 9)
    const double se = std::sqrt(12.0 / (64.0 * 9.0) / 1e5);
    CHECK(std::abs(mean(b.latent) - 0.25) < 3.0 * se);
    const Simulated b1030 = gen_density(DensityMix::beta1030, 0.1, 100000, 3);
    CHECK(std::abs(mean(b1030.latent) - 0.25) < 3.0 * std::sqrt(300.0 / (1600.0 * 41.0) / 1e5));
    const Simulated bp = gen_density(DensityMix::beta_point, 0.1, 20000, 4);
    const auto at = std::count(bp.latent.begin(), bp.latent.end(), 0.75);
    CHECK(std::abs(static_cast<double>(at) / 20000.0 - 0.5) < 3.0 * std::sqrt(0.25 / 20000.0));

    CHECK_THROWS_AS(parse_density_mix("beta33"), ArgumentError);
    CHECK_THROWS_AS(gen_density(DensityMix::beta26, -1.0, 10, 1), DomainError);
    CHECK(parse_density_mix(density_mix_name(DensityMix::beta_point)) == DensityMix::beta_point);
}

TEST_CASE("gen_studentt") {
    auto y = ys(gen_studentt(100000, 7).data);
    std::nth_element(y.begin(), y.begin() + 50000, y.end());
    // SE of the median: 1 / (2 m(0.5) sqrt(n))
    const double se_med = 1.0 / (2.0 * studentt_density(0.5) * std::sqrt(1e5));
    CHECK(std::abs(y[50000] - 0.5) < 3.0 * se_med);

    const auto v = ys(gen_studentt(100000, 8).data);
    // t5 kurtosis is 9, so var(s^2) ~ sigma^4 (9 - 1) / n
    const double var = 0.01 * 5.0 / 3.0;
    CHECK(std::abs(variance(v) - var) < 3.0 * var * std::sqrt(8.0 / 1e5));

    const Grid g = make_legendre_grid(-0.5, 1.5, 101);
    double mass = 0.0;
    for (std::size_t r = 0; r < g.size(); ++r) mass += g.weights()[r] * studentt_density(g.node(r)[0]);
    CHECK(mass >= 0.99);

    const boost::math::students_t t5(5.0);
    for (double x : {-3.0, 0.1, 0.5, 0.77, 4.0})
        CHECK(std::abs(studentt_log_density(x) - std::log(boost::math::pdf(t5, (x - 0.5) / 0.1) / 0.1)) < 1e-12);
    CHECK(std::isfinite(studentt_log_density(1e6)));
}

TEST_CASE("gen_lmm: intercept laws have mean 0 and variance 4") {
    const double n = 1e5;
    for (auto law : {InterceptLaw::gaussian, InterceptLaw::exponential, InterceptLaw::uniform2pt}) {
        CAPTURE(intercept_law_name(law));
        const Simulated s = gen_lmm(100000, 1, law, 11);
        CHECK(std::abs(mean(s.latent)) < 3.0 * std::sqrt(4.0 / n));
        double m4 = 0.0;
        for (double u : s.latent) m4 += u * u * u * u;
        m4 /= n;
        // plus the centring terms, which carry all the error when U^2 is constant
        const double ubar = mean(s.latent);
        CHECK(std::abs(variance(s.latent) - 4.0) < 3.0 * std::sqrt((m4 - 16.0) / n) + ubar * ubar + 4.0 / n);
        if (law == InterceptLaw::exponential) CHECK(*std::min_element(s.latent.begin(), s.latent.end()) >= -2.0);
        if (law == InterceptLaw::uniform2pt)
            for (double u : s.latent) CHECK((u == 2.0 || u == -2.0));
    }
    CHECK_THROWS_AS(parse_intercept_law("cauchy"), ArgumentError);
}

TEST_CASE("gen_lmm: within-subject least squares recovers beta") {
    const std::size_t n = 20000, r = 4;
    const Simulated s = gen_lmm(n, r, InterceptLaw::exponential, 5);
    // subject dummies absorbed by demeaning within subject
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n * r), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n * r));
    Eigen::Index k = 0;
    for (const auto& o : s.data) {
        const auto& rep = std::get<Replicated>(o);
        CHECK(rep.r == r);
        double mx1 = 0, mx2 = 0, my = 0;
        for (std::size_t j = 0; j < r; ++j) {
            mx1 += rep.row(j)[0] / r;
            mx2 += rep.row(j)[1] / r;
            my += rep.y[j] / r;
        }
        for (std::size_t j = 0; j < r; ++j, ++k) {
            X(k, 0) = rep.row(j)[0] - mx1;
            X(k, 1) = rep.row(j)[1] - mx2;
            y(k) = rep.y[j] - my;
        }
    }
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd b = XtX.ldlt().solve(X.transpose() * y);
    const double dof = static_cast<double>(n * (r - 1) - 2);
    const double s2 = (y - X * b).squaredNorm() / dof;
    const Eigen::MatrixXd cov = s2 * XtX.inverse();
    CHECK(std::abs(b(0) - 2.0) < 3.0 * std::sqrt(cov(0, 0)));
    CHECK(std::abs(b(1) - 5.0) < 3.0 * std::sqrt(cov(1, 1)));
    CHECK(std::abs(std::sqrt(s2) - 2.0) < 0.02);
}

TEST_CASE("gen_glmm") {
    RegressionTruth zero;
    zero.beta = {0.0, 0.0};
    const Simulated s = gen_glmm(25000, 4, InterceptLaw::uniform2pt, 3, zero);
    double ones = 0.0;
    for (const auto& o : s.data)
        for (double y : std::get<Replicated>(o).y) {
            CHECK((y == 0.0 || y == 1.0));
            ones += y;
        }
    // logistic(2) and logistic(-2) average to 1/2
    CHECK(std::abs(ones / 1e5 - 0.5) < 3.0 * std::sqrt(0.25 / 1e5));

    RegressionTruth low, high;
    low.beta = {1.0, 5.0};
    high.beta = {2.0, 5.0};
    const Simulated a = gen_glmm(20000, 4, InterceptLaw::gaussian, 9, low), b = gen_glmm(20000, 4, InterceptLaw::gaussian, 9, high);
    double ya = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const auto& ra = std::get<Replicated>(a.data[i]);
        const auto& rb = std::get<Replicated>(b.data[i]);
        for (std::size_t j = 0; j < 4; ++j)
            if (ra.row(j)[0] > 0.0) {
                CHECK(ra.row(j)[0] == rb.row(j)[0]);
                ya += ra.y[j];
                yb += rb.y[j];
            }
    }
    CHECK(yb > ya);
}

TEST_CASE("gen_armix") {
    const Simulated all_null = gen_armix(500, 10, 1.0, 1);
    for (bool b : all_null.nonnull) CHECK(!b);

    const std::size_t n = 20000;
    const Simulated s = gen_armix(n, 5, 0.75, 2);
    const double nulls = static_cast<double>(std::count(s.nonnull.begin(), s.nonnull.end(), false));
    CHECK(std::abs(nulls / n - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / n));
    const ArSupport box;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(box.sigma2.contains(s.latent[2 * i]));
        CHECK(box.phi.contains(s.latent[2 * i + 1]));
    }

    // one long null path: lag-1 autocorrelation estimates phi
    const std::size_t T = 200000;
    const Simulated one = gen_armix(1, T, 1.0, 6);
    const auto& y = std::get<Series>(one.data[0]).y;
    const double phi = one.latent[1];
    double m = 0.0;
    for (double v : y) m += v / static_cast<double>(T);
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        c0 += (y[t] - m) * (y[t] - m);
        if (t + 1 < T) c1 += (y[t] - m) * (y[t + 1] - m);
    }
    CHECK(std::abs(c1 / c0 - phi) < 3.0 * std::sqrt((1.0 - phi * phi) / static_cast<double>(T)));
    // marginal variance sigma^2 / (1 - phi)
    CHECK(std::abs(c0 / static_cast<double>(T) / (one.latent[0] / (1.0 - phi)) - 1.0) < 0.05);

    CHECK_THROWS_AS(gen_armix(10, 5, 1.5, 1), DomainError);
    CHECK_THROWS_AS(gen_armix(10, 1, 0.5, 1), ArgumentError);

    // mixing density integrates to one over its box
    const Grid g = make_product_grid(make_legendre_grid(0.5, 2.0, 5), make_legendre_grid(0.05, 0.95, 5));
    const auto f = armix_mixing_density();
    double mass = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) mass += g.weights()[j] * f(g.node(j));
    CHECK(std::abs(mass - 1.0) < 1e-13);
}

TEST_CASE("generators are pure functions of the seed") {
    CHECK(same_data(gen_density(DensityMix::beta_point, 0.1, 300, 5).data, gen_density(DensityMix::beta_point, 0.1, 300, 5).data));
    CHECK(!same_data(gen_density(DensityMix::beta26, 0.1, 300, 5).data, gen_density(DensityMix::beta26, 0.1, 300, 6).data));
    CHECK(same_data(gen_studentt(300, 5).data, gen_studentt(300, 5).data));
    CHECK(same_data(gen_lmm(50, 4, InterceptLaw::exponential, 5).data, gen_lmm(50, 4, InterceptLaw::exponential, 5).data));
    CHECK(same_data(gen_glmm(50, 4, InterceptLaw::gaussian, 5).data, gen_glmm(50, 4, InterceptLaw::gaussian, 5).data));
    const Simulated a = gen_armix(100, 8, 0.6, 5), b = gen_armix(100, 8, 0.6, 5);
    CHECK(same_data(a.data, b.data));
    CHECK(a.nonnull == b.nonnull);
    CHECK(a.latent == b.latent);
}
