#include "prml/study.hpp"

#include "prml/comparators.hpp"
#include "prml/errors.hpp"
#include "prml/estimate.hpp"
#include "prml/kl_oracle.hpp"
#include "prml/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace prml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ReplicationRow row_from_fit(const FitResult& f, std::vector<double> truth) {
    ReplicationRow row;
    const std::size_t k = truth.size();
    row.truth = std::move(truth);
    row.converged = f.converged;
    row.boundary = f.boundary;
    for (std::size_t c = 0; c < k; ++c) {
        row.estimate.push_back(f.theta_hat[c]);
        row.se.push_back(c < f.std_errors.size() ? f.std_errors[c] : kNaN);
        const bool valid = c < f.intervals.size() && f.intervals[c].valid;
        row.lo.push_back(valid ? f.intervals[c].lo : kNaN);
        row.hi.push_back(valid ? f.intervals[c].hi : kNaN);
    }
    return row;
}

FitOptions fit_options(const StudySpec& s) {
    FitOptions o;
    o.starts = s.starts;
    o.alpha = s.alpha;
    return o;
}

std::size_t points_or(const StudySpec& s, std::size_t fallback) { return s.grid_points ? s.grid_points : fallback; }

double mean_of(const Dataset& data, bool sd) {
    double m = 0.0, q = 0.0;
    std::size_t count = 0;
    for (const auto& o : data)
        for (double y : std::get<Replicated>(o).y) {
            ++count;
            const double dlt = y - m;
            m += dlt / static_cast<double>(count);
            q += dlt * (y - m);
        }
    return sd ? std::sqrt(q / static_cast<double>(std::max<std::size_t>(1, count - 1))) : m;
}

std::vector<ReplicationRow> density_replication(const StudySpec& s, std::uint64_t seed) {
    const DensityMix mix = parse_density_mix(s.mix.empty() ? "beta26" : s.mix);
    const Simulated sim = gen_density(mix, s.sigma, s.n, seed);
    const auto grid = std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, points_or(s, 201)));
    const PRModel model{gaussian_location_kernel(), GridDensity::uniform(grid), make_weights(s.weights)};
    const Box box{{0.01}, {1.0}};
    const double init[] = {0.2};
    const LikelihoodConfig cfg{s.permutations, seed, DataOrder::as_given};
    std::vector<ReplicationRow> rows;
    for (const auto& m : s.resolved_methods()) {
        const FitResult f = fit_pr(sim.data, model, box, init, parse_objective(m), cfg, fit_options(s));
        rows.push_back(row_from_fit(f, {s.sigma}));
    }
    return rows;
}

std::vector<ReplicationRow> kl_replication(const StudySpec& s, std::uint64_t seed, const std::vector<double>& kstar) {
    const Simulated sim = gen_studentt(s.n, seed);
    const auto grid = std::make_shared<const Grid>(make_trapezoid_grid(0.0, 1.0, points_or(s, 201)));
    const PRModel model{gaussian_location_kernel(), GridDensity::uniform(grid), make_weights(s.weights)};
    const auto truth = true_log_densities(sim.data, [](const Observation& o) {
        return studentt_log_density(std::get<Scalar>(o).y);
    });
    ReplicationRow row;
    row.converged = true;
    row.truth = kstar;
    for (double sigma : s.resolved_sigma_grid()) {
        const double th[] = {sigma};
        row.estimate.push_back(kn_normalized(th, sim.data, model, truth).direct);
        row.se.push_back(kNaN);
        row.lo.push_back(kNaN);
        row.hi.push_back(kNaN);
    }
    return {row};
}

std::vector<ReplicationRow> regression_replication(const StudySpec& s, std::uint64_t seed) {
    const bool linear = s.kind == StudyKind::lmm;
    const InterceptLaw law = parse_intercept_law(s.mix.empty() ? "gaussian" : s.mix);
    const Simulated sim = linear ? gen_lmm(s.n, s.r, law, seed, s.regression) : gen_glmm(s.n, s.r, law, seed, s.regression);
    const std::size_t d = s.regression.beta.size();
    std::vector<double> truth = s.regression.beta;
    if (linear) truth.push_back(s.regression.sigma);

    GridPtr grid;
    Box box;
    std::vector<double> init;
    if (linear) {
        // U support: mean +/- 3 sd of all responses
        const double ybar = mean_of(sim.data, false), sy = mean_of(sim.data, true);
        grid = std::make_shared<const Grid>(make_trapezoid_grid(ybar - 3.0 * sy, ybar + 3.0 * sy, points_or(s, 201)));
        const auto ols = pooled_least_squares(sim.data);
        for (std::size_t c = 0; c < d; ++c) {
            init.push_back(ols[c + 1]);
            box.lo.push_back(ols[c + 1] - 10.0);
            box.hi.push_back(ols[c + 1] + 10.0);
        }
        init.push_back(std::clamp(ols[d + 1], 0.1, 10.0));
        box.lo.push_back(0.05);
        box.hi.push_back(20.0);
    } else {
        grid = std::make_shared<const Grid>(make_trapezoid_grid(-8.0, 8.0, points_or(s, 201)));
        const auto pooled = pooled_logistic(sim.data);
        for (std::size_t c = 0; c < d; ++c) {
            init.push_back(std::clamp(pooled[c + 1], -9.0, 14.0));
            box.lo.push_back(-10.0);
            box.hi.push_back(15.0);
        }
    }
    const PRModel model{linear ? linear_ri_kernel(d, s.r) : logistic_ri_kernel(d, s.r), GridDensity::uniform(grid),
                        make_weights(s.weights)};
    const LikelihoodConfig cfg{s.permutations, seed, DataOrder::as_given};

    std::vector<ReplicationRow> rows;
    for (const auto& m : s.resolved_methods()) {
        if (m == "gaussian") {
            const FitResult f = linear ? fit_gaussian_lmm(sim.data, fit_options(s)) : fit_gaussian_glmm(sim.data, fit_options(s));
            rows.push_back(row_from_fit(f, truth));
        } else {
            const FitResult f = fit_pr(sim.data, model, box, init, parse_objective(m), cfg, fit_options(s));
            rows.push_back(row_from_fit(f, truth));
        }
    }
    return rows;
}

std::vector<ReplicationRow> armix_replication(const StudySpec& s, std::uint64_t seed) {
    const ArSupport support;
    const Simulated sim = gen_armix(s.n, s.T, s.theta, seed, support);
    const std::size_t J = points_or(s, 21);
    const auto grid = std::make_shared<const Grid>(
        make_product_grid(make_legendre_grid(support.sigma2.lo, support.sigma2.hi, J),
                          make_legendre_grid(support.phi.lo, support.phi.hi, J)));
    const PRModel model{ar1_mix_kernel(s.T), GridDensity::uniform(grid), make_weights(s.weights)};
    const LikelihoodConfig cfg{s.permutations, seed, DataOrder::permuted};
    const Box box{{0.001}, {0.999}};
    const double init[] = {0.5};

    // the oracle integrates the true law on a finer Legendre grid of the same box
    const auto oracle_grid = std::make_shared<const Grid>(
        make_product_grid(make_legendre_grid(support.sigma2.lo, support.sigma2.hi, 41),
                          make_legendre_grid(support.phi.lo, support.phi.hi, 41)));
    const auto oracle = oracle_lfdrs(sim.data, s.theta, armix_mixing_density(support), oracle_grid, *model.kernel);
    const TestMetrics om = metrics(classify(oracle, s.cutoff, sim.nonnull));

    std::vector<ReplicationRow> rows;
    for (const auto& m : s.resolved_methods()) {
        const FitResult f = fit_pr(sim.data, model, box, init, parse_objective(m), cfg, fit_options(s));
        ReplicationRow row = row_from_fit(f, {s.theta});
        const GridDensity fhat = pr_estimate(f.theta_hat, sim.data, model, cfg);
        const auto lf = local_fdrs(sim.data, f.theta_hat[0], fhat, *model.kernel);
        const TestMetrics pm = metrics(classify(lf, s.cutoff, sim.nonnull));
        row.fdr = pm.fdr;
        row.mp = pm.mp;
        row.oracle_fdr = om.fdr;
        row.oracle_mp = om.mp;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> component_names(const StudySpec& s) {
    switch (s.kind) {
        case StudyKind::density: return {"sigma"};
        case StudyKind::armix: return {"theta"};
        case StudyKind::lmm:
        case StudyKind::glmm: {
            std::vector<std::string> out;
            for (std::size_t c = 0; c < s.regression.beta.size(); ++c) out.push_back("beta" + std::to_string(c + 1));
            if (s.kind == StudyKind::lmm) out.push_back("sigma");
            return out;
        }
        case StudyKind::kl_limit: {
            std::vector<std::string> out;
            for (double g : s.resolved_sigma_grid()) {
                std::ostringstream os;
                os << "K_" << g;
                out.push_back(os.str());
            }
            return out;
        }
    }
    return {};
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

StudyKind parse_study_kind(const std::string& name) {
    if (name == "density") return StudyKind::density;
    if (name == "kl_limit" || name == "kl-limit") return StudyKind::kl_limit;
    if (name == "lmm") return StudyKind::lmm;
    if (name == "glmm") return StudyKind::glmm;
    if (name == "armix") return StudyKind::armix;
    throw ArgumentError("unknown study '" + name + "' (density, kl_limit, lmm, glmm, armix)");
}

const char* study_kind_name(StudyKind kind) {
    switch (kind) {
        case StudyKind::density: return "density";
        case StudyKind::kl_limit: return "kl_limit";
        case StudyKind::lmm: return "lmm";
        case StudyKind::glmm: return "glmm";
        case StudyKind::armix: return "armix";
    }
    return "?";
}

std::vector<std::string> StudySpec::resolved_methods() const {
    if (kind == StudyKind::kl_limit) return {"kn"};
    return methods.empty() ? std::vector<std::string>{"marginal"} : methods;
}

std::vector<double> StudySpec::resolved_sigma_grid() const {
    if (!sigma_grid.empty()) return sigma_grid;
    std::vector<double> g;
    for (int k = 5; k <= 30; ++k) g.push_back(k / 100.0);
    return g;
}

void StudySpec::validate() const {
    if (replications < 1) throw ArgumentError("study: replications must be at least 1");
    if (n < 1) throw ArgumentError("study: n must be at least 1");
    if (permutations < 1) throw ArgumentError("study: permutations must be at least 1");
    if (starts < 1) throw ArgumentError("study: starts must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("study: alpha must lie in (0,1)");
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ArgumentError("study: cutoff must lie in (0,1)");
    (void)make_weights(weights);
    switch (kind) {
        case StudyKind::density:
            (void)parse_density_mix(mix.empty() ? "beta26" : mix);
            if (!(sigma > 0.0)) throw DomainError("study: sigma must be positive");
            break;
        case StudyKind::kl_limit:
            for (double g : resolved_sigma_grid())
                if (!(g > 0.0)) throw DomainError("study: sigma grid values must be positive");
            break;
        case StudyKind::lmm:
        case StudyKind::glmm:
            (void)parse_intercept_law(mix.empty() ? "gaussian" : mix);
            if (r < 1) throw ArgumentError("study: r must be at least 1");
            if (regression.beta.size() != 2) throw ArgumentError("study: beta must have two components");
            if (kind == StudyKind::lmm && !(regression.sigma > 0.0)) throw DomainError("study: sigma must be positive");
            break;
        case StudyKind::armix:
            if (!(theta > 0.0 && theta < 1.0)) throw DomainError("study: theta must lie in (0,1)");
            if (T < 2) throw ArgumentError("study: T must be at least 2");
            break;
    }
    for (const auto& m : resolved_methods()) {
        if (m == "kn") continue;
        if (m == "gaussian") {
            if (kind != StudyKind::lmm && kind != StudyKind::glmm)
                throw ArgumentError("study: the gaussian comparator exists only for lmm and glmm");
            continue;
        }
        (void)parse_objective(m);
    }
}

std::vector<KStarPoint> kl_limit_oracle(const StudySpec& spec, const KLOptions& opts) {
    const YQuadrature yq = make_y_quadrature(studentt_density, -0.5, 1.5, spec.oracle_R);
    const auto grid = std::make_shared<const Grid>(make_legendre_grid(0.0, 1.0, spec.oracle_J));
    const auto sg = spec.resolved_sigma_grid();
    return kstar_curve(yq, *gaussian_location_kernel(), sg, grid, opts);
}

StudySpec full_scale(StudySpec spec) {
    switch (spec.kind) {
        case StudyKind::lmm:
        case StudyKind::glmm: spec.replications = 500; break;
        case StudyKind::kl_limit: spec.replications = 100; break;
        case StudyKind::armix:
            spec.replications = 100;
            spec.n = 5000;
            spec.permutations = 25;
            break;
        case StudyKind::density: break;
    }
    return spec;
}

StudyReport run_study(const StudySpec& spec) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    StudyReport report;
    report.spec = spec;
    report.components = component_names(spec);
    const auto methods = spec.resolved_methods();

    std::vector<double> kstar;
    if (spec.kind == StudyKind::kl_limit)
        for (const auto& p : kl_limit_oracle(spec)) kstar.push_back(p.kstar);

    std::vector<std::vector<ReplicationRow>> per(spec.replications);
    parallel_for(spec.replications, [&](std::size_t k) {
        const std::uint64_t seed = spec.seed + k;
        std::vector<ReplicationRow> rows;
        try {
            switch (spec.kind) {
                case StudyKind::density: rows = density_replication(spec, seed); break;
                case StudyKind::kl_limit: rows = kl_replication(spec, seed, kstar); break;
                case StudyKind::lmm:
                case StudyKind::glmm: rows = regression_replication(spec, seed); break;
                case StudyKind::armix: rows = armix_replication(spec, seed); break;
            }
            for (std::size_t m = 0; m < rows.size(); ++m) rows[m].method = methods[m];
        } catch (const std::exception& e) {
            rows.clear();
            for (const auto& m : methods) {
                ReplicationRow row;
                row.method = m;
                row.ok = false;
                row.error = e.what();
                rows.push_back(std::move(row));
            }
        }
        for (auto& row : rows) {
            row.replication = k;
            row.seed = seed;
        }
        per[k] = std::move(rows);
    });
    for (auto& rows : per)
        for (auto& row : rows) {
            if (!row.ok) ++report.failures;
            report.rows.push_back(std::move(row));
        }
    report.summary = summarize(report.rows, report.components, methods);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<MethodSummary> summarize(const std::vector<ReplicationRow>& rows,
                                     const std::vector<std::string>& components,
                                     const std::vector<std::string>& methods) {
    std::vector<MethodSummary> out;
    for (const auto& m : methods) {
        MethodSummary s;
        s.method = m;
        std::vector<const ReplicationRow*> good;
        for (const auto& row : rows) {
            if (row.method != m) continue;
            if (!row.ok) {
                ++s.failures;
                continue;
            }
            if (!row.converged) ++s.nonconverged;
            good.push_back(&row);
        }
        s.ok = good.size();
        for (std::size_t c = 0; c < components.size(); ++c) {
            ComponentSummary cs;
            cs.name = components[c];
            double se = 0.0, sum = 0.0, covered = 0.0;
            for (const auto* row : good) {
                const double e = row->estimate[c] - row->truth[c];
                se += e * e;
                sum += row->estimate[c];
                if (row->lo[c] <= row->truth[c] && row->truth[c] <= row->hi[c]) covered += 1.0;
            }
            cs.count = good.size();
            const double n = static_cast<double>(good.size());
            if (cs.count > 0) {
                cs.rmse = std::sqrt(se / n);
                cs.mean = sum / n;
                cs.coverage = covered / n;
                double ss = 0.0;
                for (const auto* row : good) ss += (row->estimate[c] - cs.mean) * (row->estimate[c] - cs.mean);
                cs.sd = cs.count > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            }
            s.components.push_back(cs);
        }
        if (!good.empty()) {
            for (const auto* row : good) {
                s.fdr += row->fdr;
                s.mp += row->mp;
                s.oracle_fdr += row->oracle_fdr;
                s.oracle_mp += row->oracle_mp;
            }
            const double n = static_cast<double>(good.size());
            s.fdr /= n;
            s.mp /= n;
            s.oracle_fdr /= n;
            s.oracle_mp /= n;
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_study_rows_csv(std::ostream& os, const StudyReport& report) {
    const bool armix = report.spec.kind == StudyKind::armix;
    os << "replication,seed,method,ok,converged,boundary";
    for (const auto& c : report.components) os << ",est_" << c << ",se_" << c << ",lo_" << c << ",hi_" << c << ",truth_" << c;
    if (armix) os << ",fdr,mp,oracle_fdr,oracle_mp";
    os << ",error\n";
    for (const auto& row : report.rows) {
        os << row.replication << ',' << row.seed << ',' << row.method << ',' << row.ok << ',' << row.converged << ','
           << row.boundary;
        for (std::size_t c = 0; c < report.components.size(); ++c) {
            if (row.ok)
                os << ',' << fmt(row.estimate[c]) << ',' << fmt(row.se[c]) << ',' << fmt(row.lo[c]) << ','
                   << fmt(row.hi[c]) << ',' << fmt(row.truth[c]);
            else
                os << ",,,,,";
        }
        if (armix) {
            if (row.ok)
                os << ',' << fmt(row.fdr) << ',' << fmt(row.mp) << ',' << fmt(row.oracle_fdr) << ',' << fmt(row.oracle_mp);
            else
                os << ",,,,";
        }
        std::string err = row.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << ',' << err << '\n';
    }
}

void write_study_summary(std::ostream& os, const StudyReport& report) {
    const auto& s = report.spec;
    os << "study " << study_kind_name(s.kind) << ": n=" << s.n << " replications=" << s.replications
       << " seed=" << s.seed << " permutations=" << s.permutations << '\n';
    os << "failures " << report.failures << ", wall-clock " << std::fixed << std::setprecision(2) << report.seconds
       << " s\n";
    os << std::defaultfloat << std::setprecision(6);
    for (const auto& m : report.summary) {
        os << "\n[" << m.method << "] ok=" << m.ok << " failed=" << m.failures << " nonconverged=" << m.nonconverged
           << '\n';
        os << "  component        mean          sd        rmse    coverage\n";
        for (const auto& c : m.components)
            os << "  " << std::left << std::setw(10) << c.name << std::right << std::setw(12) << c.mean << std::setw(12)
               << c.sd << std::setw(12) << c.rmse << std::setw(12) << 100.0 * c.coverage << '\n';
        if (s.kind == StudyKind::armix)
            os << "  plug-in fdr " << m.fdr << " mp " << m.mp << "; oracle fdr " << m.oracle_fdr << " mp "
               << m.oracle_mp << '\n';
    }
}

}  // namespace prml
