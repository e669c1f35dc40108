#include "cli.hpp"

#include "prml/errors.hpp"
#include "prml/estimate.hpp"
#include "prml/fdr.hpp"
#include "prml/io.hpp"
#include "prml/kl_oracle.hpp"
#include "prml/parallel.hpp"
#include "prml/simulate.hpp"
#include "prml/study.hpp"
#include "prml/version.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace prml::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    int workers = 0;
    std::string config;
    std::string data;
    std::string out_dir;
    std::string theta;   // curve: lo:hi:n
    std::string golden;  // kl-limit
    bool full_scale = false;
};

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ArgumentError("cannot create output directory '" + dir + "'");
    return fs::path(dir);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ArgumentError("cannot write '" + path.string() + "'");
    body(f);
    f.flush();
    if (!f) throw ArgumentError("write failed for '" + path.string() + "'");
}

Config config_or_default(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

bool clean(const FitResult& f) { return f.converged && !f.boundary; }

void print_fit(std::ostream& out, const FitResult& f, const std::vector<std::string>& names) {
    out << f.objective << " fit (" << f.method << ", " << f.permutations << " permutation"
        << (f.permutations == 1 ? "" : "s") << "): loglik " << format_double(f.loglik_at_max) << '\n';
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << "  " << std::left << std::setw(8) << names[c] << ' ' << format_double(f.theta_hat[c]);
        if (c < f.std_errors.size() && std::isfinite(f.std_errors[c])) out << "  se " << format_double(f.std_errors[c]);
        out << '\n';
    }
    if (!f.converged) out << "warning: optimizer did not converge\n";
    if (f.boundary) out << "warning: estimate on the boundary of the box\n";
}

int cmd_fit(const Options& o, std::ostream& out) {
    const Config cfg = load_config(o.config);
    const Dataset data = load_dataset(o.data, cfg.kernel);
    const auto dir = prepare_out(o.out_dir);
    const FitSetup setup = resolve_setup(cfg, data);
    const PRModel model = make_model(cfg, setup);
    const LikelihoodConfig lc = likelihood_config(cfg.optimizer);
    const FitResult f = fit_pr(data, model, setup.box, setup.init, cfg.optimizer.objective, lc,
                               fit_options(cfg.optimizer));
    const auto names = parameter_names(setup.kernel);
    write_file(dir / "fit_report.txt", [&](std::ostream& os) {
        os << "kernel = " << setup.kernel.name << '\n'
           << "n = " << data.size() << '\n'
           << "grid_points = " << setup.grid->size() << '\n'
           << "weights = " << model.weights.describe() << '\n'
           << "seed = " << cfg.optimizer.seed << '\n';
        write_fit_report(os, f, names);
    });
    const GridDensity fhat = pr_estimate(f.theta_hat, data, model, lc);
    write_file(dir / "mixing_density.csv", [&](std::ostream& os) { write_density_csv(os, fhat); });
    print_fit(out, f, names);
    return clean(f) ? ok : numerical_warning;
}

CurveSpec parse_theta_range(const std::string& text) {
    // lo:hi:n
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    auto num = [&](const std::string& s) {
        double x = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc() || p != s.data() + s.size()) throw ArgumentError("--theta: bad number '" + s + "'");
        return x;
    };
    if (parts.size() != 3) throw ArgumentError("--theta expects lo:hi:n");
    const double n = num(parts[2]);
    if (!(n >= 1.0) || n != std::floor(n)) throw ArgumentError("--theta: n must be a positive integer");
    return CurveSpec{{num(parts[0])}, {num(parts[1])}, {static_cast<std::size_t>(n)}};
}

int cmd_curve(const Options& o, std::ostream& out) {
    const Config cfg = load_config(o.config);
    const Dataset data = load_dataset(o.data, cfg.kernel);
    const auto dir = prepare_out(o.out_dir);
    const FitSetup setup = resolve_setup(cfg, data);
    const PRModel model = make_model(cfg, setup);
    CurveSpec curve = cfg.curve;
    if (!o.theta.empty()) curve = parse_theta_range(o.theta);
    if (curve.points.empty()) {
        curve.lo = setup.box.lo;
        curve.hi = setup.box.hi;
        curve.points.assign(setup.box.dim(), 41);
    }
    if (curve.points.size() != setup.box.dim())
        throw ArgumentError("curve grid has " + std::to_string(curve.points.size()) + " components; the kernel has " +
                            std::to_string(setup.box.dim()));
    const auto points = likelihood_curve(curve.thetas(), data, model, likelihood_config(cfg.optimizer));
    write_file(dir / "curve.csv", [&](std::ostream& os) { write_curve_csv(os, points, curve); });

    std::size_t bp = 0, bq = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].prml > points[bp].prml) bp = i;
        if (points[i].profile > points[bq].profile) bq = i;
    }
    auto show = [](const std::vector<double>& t) {
        std::string s;
        for (double v : t) s += (s.empty() ? "" : ",") + format_double(v);
        return s;
    };
    out << points.size() << " curve points written\n"
        << "  prml peak at theta = " << show(points[bp].theta) << '\n'
        << "  profile peak at theta = " << show(points[bq].theta) << '\n';
    return ok;
}

StudySpec study_from(const Options& o) {
    StudySpec s = config_or_default(o.config).study;
    if (o.full_scale) s = full_scale(s);
    return s;
}

int cmd_kl_limit(const Options& o, std::ostream& out) {
    StudySpec spec = study_from(o);
    spec.kind = StudyKind::kl_limit;
    const auto dir = prepare_out(o.out_dir);
    const StudyReport rep = run_study(spec);
    const auto sigmas = spec.resolved_sigma_grid();
    const std::size_t R = rep.rows.size();

    std::vector<double> kstar(sigmas.size(), std::nan("")), mean(sigmas.size(), 0.0);
    std::vector<std::size_t> count(sigmas.size(), 0);
    for (const auto& row : rep.rows) {
        if (!row.ok) continue;
        for (std::size_t j = 0; j < sigmas.size(); ++j) {
            kstar[j] = row.truth[j];
            mean[j] += row.estimate[j];
            ++count[j];
        }
    }
    for (std::size_t j = 0; j < sigmas.size(); ++j) mean[j] = count[j] ? mean[j] / count[j] : std::nan("");

    write_file(dir / "kl_limit.csv", [&](std::ostream& os) {
        os << "sigma,kstar,mean_kn";
        for (std::size_t r = 0; r < R; ++r) os << ",kn_" << r + 1;
        os << '\n';
        for (std::size_t j = 0; j < sigmas.size(); ++j) {
            os << format_double(sigmas[j]) << ',' << format_double(kstar[j]) << ',' << format_double(mean[j]);
            for (const auto& row : rep.rows) os << ',' << format_double(row.ok ? row.estimate[j] : std::nan(""));
            os << '\n';
        }
    });
    write_file(dir / "summary.txt", [&](std::ostream& os) { write_study_summary(os, rep); });

    if (!o.golden.empty()) {
        const KLOptions kopts;
        const auto curve = kl_limit_oracle(spec, kopts);
        write_file(o.golden, [&](std::ostream& os) {
            write_kstar_csv(os, KStarHeader{spec.oracle_J, spec.oracle_R, kopts.tol, std::string(build_commit())},
                            curve);
        });
        out << "oracle curve written to " << o.golden << '\n';
    }

    double worst = 0.0;
    for (std::size_t j = 0; j < sigmas.size(); ++j) worst = std::max(worst, std::abs(mean[j] - kstar[j]));
    out << "kl-limit: " << R << " replications, n = " << spec.n << ", " << sigmas.size() << " sigma values\n"
        << "  max |mean K_n - K*| = " << format_double(worst) << '\n';
    if (rep.failures) out << "warning: " << rep.failures << " failed replications\n";
    return rep.failures ? numerical_warning : ok;
}

int cmd_mtest(const Options& o, std::ostream& out) {
    Config cfg = load_config(o.config);
    if (cfg.kernel.name != "ar1_mix") throw ArgumentError("mtest needs [kernel] name = ar1_mix");
    std::vector<bool> truth;
    const Dataset data = load_dataset(o.data, cfg.kernel, &truth);
    const auto dir = prepare_out(o.out_dir);
    const FitSetup setup = resolve_setup(cfg, data);
    const PRModel model = make_model(cfg, setup);
    const LikelihoodConfig lc = likelihood_config(cfg.optimizer);
    const FitResult f = fit_pr(data, model, setup.box, setup.init, ObjectiveKind::prml, lc, fit_options(cfg.optimizer));
    const GridDensity fhat = pr_estimate(f.theta_hat, data, model, lc);
    const auto lf = local_fdrs(data, f.theta_hat[0], fhat, *model.kernel);
    const auto decisions = classify(lf, cfg.cutoff, truth);

    write_file(dir / "decisions.csv", [&](std::ostream& os) { write_decisions_csv(os, decisions); });
    write_file(dir / "fit_report.txt", [&](std::ostream& os) {
        os << "kernel = ar1_mix\n"
           << "n = " << data.size() << '\n'
           << "cutoff = " << format_double(cfg.cutoff) << '\n';
        write_fit_report(os, f, {"theta"});
    });
    std::size_t flagged = 0;
    for (const auto& d : decisions) flagged += d.flagged;
    print_fit(out, f, {"theta"});
    out << "  " << flagged << " of " << data.size() << " series flagged at lfdr <= " << format_double(cfg.cutoff) << '\n';
    if (!truth.empty()) {
        const TestMetrics m = metrics(decisions);
        write_file(dir / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, m); });
        out << "  FDR " << format_double(m.fdr) << ", misclassification " << format_double(m.mp) << '\n';
    }
    return clean(f) ? ok : numerical_warning;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const StudySpec s = config_or_default(o.config).study;
    const auto dir = prepare_out(o.out_dir);
    Simulated sim;
    std::string latent_header = "u";
    switch (s.kind) {
        case StudyKind::density:
            sim = gen_density(parse_density_mix(s.mix.empty() ? "beta26" : s.mix), s.sigma, s.n, s.seed);
            break;
        case StudyKind::kl_limit: sim = gen_studentt(s.n, s.seed); break;
        case StudyKind::lmm:
            sim = gen_lmm(s.n, s.r, parse_intercept_law(s.mix.empty() ? "gaussian" : s.mix), s.seed, s.regression);
            break;
        case StudyKind::glmm:
            sim = gen_glmm(s.n, s.r, parse_intercept_law(s.mix.empty() ? "gaussian" : s.mix), s.seed, s.regression);
            break;
        case StudyKind::armix:
            if (!(s.theta >= 0.0 && s.theta <= 1.0)) throw DomainError("[study] theta must lie in [0, 1]");
            sim = gen_armix(s.n, s.T, s.theta, s.seed);
            latent_header = "sigma2,phi";
            break;
    }
    write_file(dir / "data.csv", [&](std::ostream& os) { write_dataset_csv(os, sim.data, sim.nonnull); });
    const std::size_t width = s.kind == StudyKind::armix ? 2 : 1;
    write_file(dir / "latent.csv", [&](std::ostream& os) {
        os << latent_header << '\n';
        for (std::size_t i = 0; i + width <= sim.latent.size(); i += width) {
            os << format_double(sim.latent[i]);
            if (width == 2) os << ',' << format_double(sim.latent[i + 1]);
            os << '\n';
        }
    });
    out << "simulated " << sim.data.size() << " observations (" << study_kind_name(s.kind) << ", seed " << s.seed
        << ")\n";
    return ok;
}

int cmd_study(const Options& o, std::ostream& out) {
    const StudySpec spec = study_from(o);
    const auto dir = prepare_out(o.out_dir);
    const StudyReport rep = run_study(spec);
    write_file(dir / "rows.csv", [&](std::ostream& os) { write_study_rows_csv(os, rep); });
    write_file(dir / "summary.txt", [&](std::ostream& os) { write_study_summary(os, rep); });
    write_study_summary(out, rep);
    return rep.failures ? numerical_warning : ok;
}

int workers_from_env(std::ostream& err, bool& bad) {
    const char* env = std::getenv("PRML_WORKERS");
    if (!env || !*env) return 0;
    int w = 0;
    const auto [p, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), w);
    if (ec != std::errc() || *p != '\0' || w < 0) {
        err << "error: PRML_WORKERS must be a nonnegative integer, got '" << env << "'\n";
        bad = true;
    }
    return w;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    bool bad_env = false;
    o.workers = workers_from_env(err, bad_env);
    if (bad_env) return input_error;

    CLI::App app{"Predictive recursion marginal likelihood: fits, curves, studies and multiple testing"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(build_commit()));
    app.add_option("--workers", o.workers, "Cap on worker threads (default: PRML_WORKERS, else all cores)")
        ->check(CLI::NonNegativeNumber);

    auto* fit = app.add_subcommand("fit", "Maximize the PR marginal or profile likelihood");
    auto* curve = app.add_subcommand("curve", "Evaluate both log-likelihoods over a theta grid");
    auto* kl = app.add_subcommand("kl-limit", "K_n(sigma) replications against the K*(sigma) oracle");
    auto* mtest = app.add_subcommand("mtest", "Local FDR multiple testing for AR(1) series");
    auto* sim = app.add_subcommand("simulate", "Generate a data set from the [study] section");
    auto* study = app.add_subcommand("study", "Run a simulation study");

    for (auto* sc : {fit, curve, mtest}) {
        sc->add_option("-c,--config", o.config, "Config file")->required();
        sc->add_option("-d,--data", o.data, "Data CSV")->required();
    }
    for (auto* sc : {kl, sim})
        sc->add_option("-c,--config", o.config, "Config file (defaults apply when omitted)");
    study->add_option("-c,--config", o.config, "Config file")->required();
    for (auto* sc : {fit, curve, kl, mtest, sim, study})
        sc->add_option("-o,--out", o.out_dir, "Output directory")->required();
    curve->add_option("--theta", o.theta, "Scalar theta grid lo:hi:n (overrides [curve])");
    kl->add_option("--golden", o.golden, "Also write the K* curve in the golden-file format here");
    for (auto* sc : {kl, study}) sc->add_flag("--full-scale", o.full_scale, "Use full-size replication counts");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }

    set_workers(o.workers);
    try {
        if (*fit) return cmd_fit(o, out);
        if (*curve) return cmd_curve(o, out);
        if (*kl) return cmd_kl_limit(o, out);
        if (*mtest) return cmd_mtest(o, out);
        if (*sim) return cmd_simulate(o, out);
        if (*study) return cmd_study(o, out);
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const CapabilityError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const DegenerateObservation& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return internal_error;
    }
    return internal_error;
}

}  // namespace prml::cli
