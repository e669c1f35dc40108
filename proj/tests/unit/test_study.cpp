#include "doctest.h"
#include "fixtures.hpp"

#include "prml/comparators.hpp"
#include "prml/errors.hpp"
#include "prml/estimate.hpp"
#include "prml/parallel.hpp"
#include "prml/study.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace prml;
using namespace prml::testing;

namespace {

std::string rows_csv(const StudyReport& r) {
    std::ostringstream os;
    write_study_rows_csv(os, r);
    return os.str();
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates Gaussian moments") {
    const HermiteRule rule = gauss_hermite(20);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0, m1 = 0;
    for (std::size_t k = 0; k < 20; ++k) {
        const double x = rule.nodes[k], w = rule.weights[k];
        m0 += w;
        m1 += w * x;
        m2 += w * x * x;
        m4 += w * std::pow(x, 4);
        m6 += w * std::pow(x, 6);
    }
    CHECK(std::abs(m0 - 1.0) < 1e-13);
    CHECK(std::abs(m1) < 1e-13);
    CHECK(std::abs(m2 - 1.0) < 1e-12);
    CHECK(std::abs(m4 - 3.0) < 1e-11);
    CHECK(std::abs(m6 - 15.0) < 1e-10);
    CHECK_THROWS_AS(gauss_hermite(0), ArgumentError);
}

TEST_CASE("gaussian lmm likelihood against a dense normal density") {
    const Simulated s = gen_lmm(10, 4, InterceptLaw::gaussian, 1);
    const double p[] = {1.7, 4.4, 1.8, 0.3, 1.5};
    double dense = 0.0;
    for (const auto& o : s.data) {
        const auto& r = std::get<Replicated>(o);
        Eigen::MatrixXd V = Eigen::MatrixXd::Constant(4, 4, p[4] * p[4]);
        V.diagonal().array() += p[2] * p[2];
        Eigen::VectorXd e(4);
        for (int j = 0; j < 4; ++j) e(j) = r.y[j] - p[3] - r.row(j)[0] * p[0] - r.row(j)[1] * p[1];
        const Eigen::LLT<Eigen::MatrixXd> llt(V);
        const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        dense += -0.5 * (4.0 * std::log(2.0 * std::numbers::pi) + logdet + e.dot(llt.solve(e)));
    }
    CHECK(std::abs(gaussian_lmm_loglik(p, s.data) - dense) < 1e-10 * std::abs(dense));

    std::vector<double> g(5);
    gaussian_lmm_loglik_grad(p, s.data, g);
    const auto fd = central_difference([&](std::span<const double> t) { return gaussian_lmm_loglik(t, s.data); },
                                       std::vector<double>(p, p + 5));
    for (int k = 0; k < 5; ++k) CHECK(rel_err(g[k], fd[k]) < 1e-6);
}

TEST_CASE("gaussian glmm likelihood against adaptive quadrature") {
    const Simulated s = gen_glmm(6, 4, InterceptLaw::gaussian, 2);
    const double p[] = {1.5, 3.0, 0.4, 1.7};
    const HermiteRule rule = gauss_hermite(40);
    double ref = 0.0;
    for (const auto& o : s.data) {
        const auto& r = std::get<Replicated>(o);
        auto integrand = [&](double z) {
            double l = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
            for (int j = 0; j < 4; ++j) {
                const double eta = p[2] + p[3] * z + r.row(j)[0] * p[0] + r.row(j)[1] * p[1];
                const double pr = 1.0 / (1.0 + std::exp(-eta));
                l *= r.y[j] == 1.0 ? pr : 1.0 - pr;
            }
            return l;
        };
        ref += std::log(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 10, 1e-14));
    }
    CHECK(std::abs(gaussian_glmm_loglik(p, s.data, rule) - ref) < 1e-8 * std::abs(ref));
    CHECK(std::abs(gaussian_glmm_loglik(p, s.data, gauss_hermite(20)) - ref) < 1e-3 * std::abs(ref));

    std::vector<double> g(4);
    gaussian_glmm_loglik_grad(p, s.data, rule, g);
    const auto fd = central_difference(
        [&](std::span<const double> t) { return gaussian_glmm_loglik(t, s.data, rule); }, std::vector<double>(p, p + 4));
    for (int k = 0; k < 4; ++k) CHECK(rel_err(g[k], fd[k]) < 1e-6);
}

TEST_CASE("pooled starting values") {
    const Simulated s = gen_lmm(2000, 4, InterceptLaw::gaussian, 3);
    const auto ols = pooled_least_squares(s.data);
    CHECK(std::abs(ols[1] - 2.0) < 0.1);
    CHECK(std::abs(ols[2] - 5.0) < 0.3);
    CHECK(std::abs(ols[3] - std::sqrt(8.0)) < 0.1);
    const auto lr = pooled_logistic(gen_glmm(2000, 4, InterceptLaw::gaussian, 3).data);
    CHECK(lr[1] > 0.5);
    CHECK(lr[1] < 2.0);  // attenuated by the ignored intercept
}

TEST_CASE("study with one replication: aggregates equal the single row") {
    StudySpec s;
    s.kind = StudyKind::density;
    s.n = 60;
    s.methods = {"marginal", "profile"};
    const StudyReport r = run_study(s);
    REQUIRE(r.rows.size() == 2);
    REQUIRE(r.summary.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto& row = r.rows[m];
        const auto& c = r.summary[m].components[0];
        CHECK(row.ok);
        CHECK(c.mean == row.estimate[0]);
        CHECK(std::abs(c.rmse - std::abs(row.estimate[0] - 0.1)) < 1e-15);
        CHECK(c.sd == 0.0);
        CHECK(c.count == 1);
    }
    CHECK(r.rows[0].method == "marginal");
    CHECK(r.rows[1].method == "profile");
}

TEST_CASE("study aggregates are recomputable from the rows; results ignore the worker count") {
    StudySpec s;
    s.kind = StudyKind::lmm;
    s.n = 30;
    s.replications = 6;
    s.seed = 40;
    s.methods = {"marginal", "gaussian"};
    s.starts = 1;
    set_workers(1);
    const StudyReport a = run_study(s);
    set_workers(3);
    const StudyReport b = run_study(s);
    set_workers(0);
    CHECK(rows_csv(a) == rows_csv(b));
    CHECK(a.failures == 0);

    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t c = 0; c < 3; ++c) {
            double se = 0.0;
            std::size_t k = 0;
            for (const auto& row : a.rows)
                if (row.method == a.summary[m].method) {
                    se += (row.estimate[c] - row.truth[c]) * (row.estimate[c] - row.truth[c]);
                    ++k;
                }
            CHECK(k == 6);
            CHECK(std::abs(a.summary[m].components[c].rmse - std::sqrt(se / 6.0)) < 1e-12);
        }
    const auto again = summarize(a.rows, a.components, s.resolved_methods());
    CHECK(again[1].components[2].coverage == a.summary[1].components[2].coverage);
    CHECK(a.rows[1].seed == 40);
    CHECK(a.rows[2].seed == 41);
}

TEST_CASE("replication failures are recorded, not fatal") {
    StudySpec s;
    s.kind = StudyKind::density;
    s.n = 20;
    s.replications = 3;
    s.grid_points = 1;  // too small for a trapezoid rule
    const StudyReport r = run_study(s);
    CHECK(r.failures == 3);
    CHECK(r.summary[0].failures == 3);
    CHECK(r.summary[0].ok == 0);
    for (const auto& row : r.rows) {
        CHECK(!row.ok);
        CHECK(row.error.find("trapezoid") != std::string::npos);
    }
    CHECK(rows_csv(r).find(",,,,,") != std::string::npos);
}

TEST_CASE("study spec validation") {
    StudySpec s;
    s.replications = 0;
    CHECK_THROWS_AS(run_study(s), ArgumentError);
    s = {};
    s.mix = "beta99";
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s = {};
    s.methods = {"gaussian"};
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s = {};
    s.kind = StudyKind::armix;
    s.theta = 1.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    CHECK(parse_study_kind("kl-limit") == StudyKind::kl_limit);
    CHECK_THROWS_AS(parse_study_kind("table3"), ArgumentError);
    CHECK(StudySpec{}.resolved_sigma_grid().size() == 26);
}

TEST_CASE("kl_limit study: finite curve near the oracle") {
    StudySpec s;
    s.kind = StudyKind::kl_limit;
    s.n = 100;
    s.sigma_grid = {0.05, 0.1, 0.2};
    const StudyReport r = run_study(s);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.components == std::vector<std::string>{"K_0.05", "K_0.1", "K_0.2"});
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::isfinite(r.rows[0].estimate[c]));
        CHECK(r.rows[0].estimate[c] >= -0.05);
    }
    CHECK(std::abs(r.rows[0].truth[1] - 0.001665511793) < 1e-11);
}

TEST_CASE("armix study reports plug-in and oracle error rates") {
    StudySpec s;
    s.kind = StudyKind::armix;
    s.n = 150;
    s.T = 10;
    s.grid_points = 7;
    s.permutations = 2;
    s.starts = 1;
    const StudyReport r = run_study(s);
    REQUIRE(r.rows.size() == 1);
    const auto& row = r.rows[0];
    CHECK(row.ok);
    CHECK(row.estimate[0] > 0.01);
    CHECK(row.estimate[0] < 0.99);
    for (double v : {row.fdr, row.mp, row.oracle_fdr, row.oracle_mp}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    std::ostringstream os;
    write_study_summary(os, r);
    CHECK(os.str().find("oracle fdr") != std::string::npos);
}

TEST_CASE("density pipeline, n = 50: the PRML curve peaks near the true sigma") {
    const Simulated sim = gen_density(DensityMix::beta26, 0.1, 50, 12);
    const auto grid = std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, 201));
    const PRModel m{gaussian_location_kernel(), GridDensity::uniform(grid), WeightSequence::power()};
    std::vector<std::vector<double>> thetas;
    for (int k = 1; k <= 50; ++k) thetas.push_back({0.01 * k});
    const auto curve = likelihood_curve(thetas, sim.data, m, {1, 0, DataOrder::as_given});
    std::size_t arg = 0;
    for (std::size_t k = 0; k < curve.size(); ++k)
        if (curve[k].prml > curve[arg].prml) arg = k;
    CHECK(thetas[arg][0] >= 0.04);
    CHECK(thetas[arg][0] <= 0.25);
    // no second local maximum: rises to the peak, falls after it
    for (std::size_t k = 1; k <= arg; ++k) CHECK(curve[k].prml >= curve[k - 1].prml - 1e-9);
    for (std::size_t k = arg + 1; k < curve.size(); ++k) CHECK(curve[k].prml <= curve[k - 1].prml + 1e-9);
    bool differ = false;
    for (const auto& p : curve) differ = differ || std::abs(p.prml - p.profile) > 1e-6;
    CHECK(differ);
}
