#include "prml/inference.hpp"

#include "prml/errors.hpp"
#include "prml/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace prml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimization problem on the unconstrained (internal) scale: F = -loglik.
class InternalProblem {
public:
    InternalProblem(const Objective& obj, std::vector<Transform> tr, const Box& box)
        : obj_(obj), tr_(std::move(tr)) {
        const std::size_t k = box.dim();
        lo_.resize(k);
        hi_.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            lo_(i) = to_internal(tr_[i], box.lo[i]);
            hi_(i) = to_internal(tr_[i], box.hi[i]);
        }
    }

    std::size_t dim() const { return tr_.size(); }
    const Eigen::VectorXd& lo() const { return lo_; }
    const Eigen::VectorXd& hi() const { return hi_; }
    std::size_t evaluations() const { return evals_; }

    std::vector<double> natural(const Eigen::VectorXd& eta) const {
        std::vector<double> th(dim());
        for (std::size_t i = 0; i < dim(); ++i) th[i] = to_natural(tr_[i], eta(i));
        return th;
    }

    Eigen::VectorXd internal(std::span<const double> theta) const {
        Eigen::VectorXd eta(dim());
        for (std::size_t i = 0; i < dim(); ++i) eta(i) = to_internal(tr_[i], theta[i]);
        return eta;
    }

    Eigen::VectorXd project(Eigen::VectorXd eta) const { return eta.cwiseMax(lo_).cwiseMin(hi_); }

    double value(const Eigen::VectorXd& eta) {
        ++evals_;
        const auto th = natural(eta);
        return guard([&] { return -obj_.value(th); });
    }

    double value_grad(const Eigen::VectorXd& eta, Eigen::VectorXd& grad) {
        ++evals_;
        const auto th = natural(eta);
        std::vector<double> g(dim(), 0.0);
        const double f = guard([&] { return -obj_.value_grad(th, g); });
        grad.resize(static_cast<Eigen::Index>(dim()));
        for (std::size_t i = 0; i < dim(); ++i) grad(i) = -g[i] * natural_jacobian(tr_[i], eta(i));
        if (!std::isfinite(f)) grad.setZero();
        return f;
    }

private:
    template <class F>
    static double guard(F&& f) {
        double v;
        try {
            v = f();
        } catch (const DegenerateObservation&) {
            return kInf;
        }
        if (std::isnan(v)) throw NumericalError("objective evaluated to NaN");
        return v;
    }

    const Objective& obj_;
    std::vector<Transform> tr_;
    Eigen::VectorXd lo_, hi_;
    std::size_t evals_ = 0;
};

struct LocalResult {
    Eigen::VectorXd x;
    double f = kInf;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

// Projected BFGS: variables pinned at a bound with the gradient pushing
// outward are held fixed; the rest take a quasi-Newton step followed by a
// projected Armijo backtracking line search.
LocalResult projected_bfgs(InternalProblem& prob, Eigen::VectorXd x, const FitOptions& opts) {
    const Eigen::Index k = static_cast<Eigen::Index>(prob.dim());
    const auto& lo = prob.lo();
    const auto& hi = prob.hi();
    x = prob.project(x);
    Eigen::VectorXd g;
    double f = prob.value_grad(x, g);
    if (!std::isfinite(f)) throw NumericalError("objective is not finite at the starting point");

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(k, k);
    bool fresh = true;
    LocalResult res;
    const double edge = 1e-12;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        res.iterations = it + 1;
        std::vector<bool> fixed(static_cast<std::size_t>(k));
        Eigen::VectorXd pg = g;
        for (Eigen::Index i = 0; i < k; ++i) {
            const bool at_lo = x(i) <= lo(i) + edge * (1.0 + std::abs(lo(i))) && g(i) > 0.0;
            const bool at_hi = x(i) >= hi(i) - edge * (1.0 + std::abs(hi(i))) && g(i) < 0.0;
            fixed[static_cast<std::size_t>(i)] = at_lo || at_hi;
            if (fixed[static_cast<std::size_t>(i)]) pg(i) = 0.0;
        }
        if (pg.lpNorm<Eigen::Infinity>() < opts.gtol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = -(H * pg);
        for (Eigen::Index i = 0; i < k; ++i)
            if (fixed[static_cast<std::size_t>(i)]) d(i) = 0.0;
        if (d.dot(pg) >= 0.0) {
            H.setIdentity();
            fresh = true;
            d = -pg;
        }
        if (fresh) {
            const double scale = std::min(1.0, 1.0 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-300));
            d *= scale;
        }

        double t = 1.0;
        Eigen::VectorXd xn, gn;
        double fn = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xn = prob.project(x + t * d);
            const Eigen::VectorXd step = xn - x;
            if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
            fn = prob.value_grad(xn, gn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(step)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!fresh) {
                H.setIdentity();
                fresh = true;
                continue;
            }
            // No decrease along the projected gradient: stalled at working precision.
            res.converged = pg.lpNorm<Eigen::Infinity>() < 1e-3;
            break;
        }

        const Eigen::VectorXd s = xn - x, y = gn - g;
        const double sy = s.dot(y);
        const bool small_change = std::abs(f - fn) <= opts.ftol * (1.0 + std::abs(f));
        x = xn;
        g = gn;
        f = fn;
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) H = Eigen::MatrixXd::Identity(k, k) * (sy / y.dot(y));
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
            H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
            fresh = false;
        }
        if (small_change) {
            res.converged = true;
            break;
        }
    }
    res.x = x;
    res.f = f;
    return res;
}

LocalResult nelder_mead(InternalProblem& prob, Eigen::VectorXd x0, const FitOptions& opts) {
    const Eigen::Index k = static_cast<Eigen::Index>(prob.dim());
    x0 = prob.project(x0);
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(k + 1), x0);
    std::vector<double> fv(static_cast<std::size_t>(k + 1));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double span = prob.hi()(i) - prob.lo()(i);
        double step = 0.1 * span;
        if (x0(i) + step > prob.hi()(i)) step = -step;
        simplex[static_cast<std::size_t>(i + 1)](i) += step;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = prob.value(simplex[i]);

    LocalResult res;
    std::vector<std::size_t> idx(simplex.size());
    const std::size_t budget = opts.max_iter * 10 * static_cast<std::size_t>(k + 1);
    for (std::size_t it = 0; it < budget; ++it) {
        res.iterations = it + 1;
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
        const double spread = std::abs(fv[worst] - fv[best]);
        if (std::isfinite(fv[worst]) && spread <= opts.ftol * (1.0 + std::abs(fv[best]))) {
            double diam = 0.0;
            for (const auto& v : simplex) diam = std::max(diam, (v - simplex[best]).lpNorm<Eigen::Infinity>());
            if (diam < 1e-8) {
                res.converged = true;
                break;
            }
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(k);

        const Eigen::VectorXd xr = prob.project(centroid + (centroid - simplex[worst]));
        const double fr = prob.value(xr);
        if (fr < fv[best]) {
            const Eigen::VectorXd xe = prob.project(centroid + 2.0 * (centroid - simplex[worst]));
            const double fe = prob.value(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const Eigen::VectorXd xc = fr < fv[worst] ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = prob.value(xc);
        if (fc < std::min(fr, fv[worst])) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            fv[i] = prob.value(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = simplex[best];
    res.f = fv[best];
    return res;
}

std::vector<double> default_steps(std::span<const double> theta) {
    std::vector<double> h(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) h[i] = 1e-4 * (1.0 + std::abs(theta[i]));
    return h;
}

}  // namespace

double normal_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), alpha / 2.0));
}

Eigen::MatrixXd hessian_at(const Objective& objective, std::span<const double> theta, std::span<const double> steps,
                           HessianMethod method, const Box* box) {
    const std::size_t k = theta.size();
    std::vector<double> h(steps.begin(), steps.end());
    if (h.empty()) h = default_steps(theta);
    if (h.size() != k) throw ArgumentError("hessian_at: one step per component required");
    if (method == HessianMethod::automatic)
        method = objective.has_gradient() ? HessianMethod::gradient_differences : HessianMethod::function_differences;
    if (method == HessianMethod::gradient_differences && !objective.has_gradient())
        throw CapabilityError("hessian_at: objective has no gradient");

    // Offsets (plus, minus) along axis i; one-sided when a step leaves the box.
    auto offsets = [&](std::size_t i) {
        double up = h[i], down = h[i];
        if (box) {
            if (theta[i] + up > box->hi[i]) up = 0.0;
            if (theta[i] - down < box->lo[i]) down = 0.0;
            if (up == 0.0 && down == 0.0) up = h[i];
        }
        return std::pair{up, down};
    };

    Eigen::MatrixXd H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    std::vector<double> x(theta.begin(), theta.end());
    if (method == HessianMethod::gradient_differences) {
        std::vector<double> gp(k), gm(k);
        for (std::size_t i = 0; i < k; ++i) {
            auto [up, down] = offsets(i);
            x[i] = theta[i] + up;
            objective.value_grad(x, gp);
            x[i] = theta[i] - down;
            objective.value_grad(x, gm);
            x[i] = theta[i];
            for (std::size_t j = 0; j < k; ++j)
                H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = -(gp[j] - gm[j]) / (up + down);
        }
    } else {
        const double f0 = objective.value(x);
        auto f_at = [&](std::size_t i, double di, std::size_t j, double dj) {
            x[i] += di;
            x[j] += dj;
            const double v = objective.value(x);
            x[i] = theta[i];
            x[j] = theta[j];
            return v;
        };
        for (std::size_t i = 0; i < k; ++i) {
            auto [up, down] = offsets(i);
            double d2;
            if (up > 0.0 && down > 0.0) {
                d2 = (f_at(i, up, i, 0.0) - 2.0 * f0 + f_at(i, -down, i, 0.0)) / (up * down);
            } else {
                const double s = up > 0.0 ? up : -down;
                d2 = (f_at(i, 2.0 * s, i, 0.0) - 2.0 * f_at(i, s, i, 0.0) + f0) / (s * s);
            }
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = -d2;
            for (std::size_t j = 0; j < i; ++j) {
                auto [uj, dj] = offsets(j);
                const double si = up > 0.0 ? up : -down, sj = uj > 0.0 ? uj : -dj;
                double mixed;
                if (up > 0.0 && down > 0.0 && uj > 0.0 && dj > 0.0) {
                    mixed = (f_at(i, up, j, uj) - f_at(i, up, j, -dj) - f_at(i, -down, j, uj) +
                             f_at(i, -down, j, -dj)) /
                            ((up + down) * (uj + dj));
                } else {
                    mixed = (f_at(i, si, j, sj) - f_at(i, si, j, 0.0) - f_at(i, 0.0, j, sj) + f0) / (si * sj);
                }
                H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -mixed;
                H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = -mixed;
            }
        }
    }
    return 0.5 * (H + H.transpose());
}

CovarianceResult invert_hessian(const Eigen::MatrixXd& hessian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    bool pd = scale > 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) > 1e-12 * scale) inv(i) = 1.0 / ev(i);
        if (!(ev(i) > 1e-12 * scale)) pd = false;
    }
    CovarianceResult out;
    out.cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    out.positive_definite = pd;
    return out;
}

std::vector<ConfidenceInterval> confint(const FitResult& fit, double alpha) {
    const std::size_t k = fit.theta_hat.size();
    if (static_cast<std::size_t>(fit.cov.rows()) != k) throw ArgumentError("confint: covariance not available");
    const double z = normal_critical_value(alpha);
    std::vector<ConfidenceInterval> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double v = fit.cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        if (v > 0.0 && std::isfinite(v)) {
            const double half = z * std::sqrt(v);
            out[j] = {fit.theta_hat[j] - half, fit.theta_hat[j] + half, true};
        } else {
            out[j] = {fit.theta_hat[j], fit.theta_hat[j], false};
        }
    }
    return out;
}

FitResult fit(const Objective& objective, const Box& box, std::span<const double> init, const FitOptions& opts) {
    box.validate();
    const std::size_t k = box.dim();
    if (init.size() != k) throw ArgumentError("fit: initial value has wrong dimension");
    if (!box.contains(init)) throw ArgumentError("fit: initial value outside the box");
    if (!objective.value) throw ArgumentError("fit: objective has no value function");
    std::vector<Transform> tr = opts.transforms.empty() ? std::vector<Transform>(k, Transform::identity) : opts.transforms;
    if (tr.size() != k) throw ArgumentError("fit: one transform per component required");

    const bool use_nm = opts.nelder_mead || !objective.has_gradient();
    const std::size_t starts = std::max<std::size_t>(1, opts.starts);

    InternalProblem proto(objective, tr, box);
    std::vector<Eigen::VectorXd> x0(starts);
    x0[0] = proto.internal(init);
    for (std::size_t s = 1; s < starts; ++s)
        x0[s] = proto.lo() + (static_cast<double>(s) / static_cast<double>(starts)) * (proto.hi() - proto.lo());

    std::vector<LocalResult> local(starts);
    std::vector<std::size_t> evals(starts);
    parallel_for(starts, [&](std::size_t s) {
        InternalProblem prob(objective, tr, box);
        local[s] = use_nm ? nelder_mead(prob, x0[s], opts) : projected_bfgs(prob, x0[s], opts);
        evals[s] = prob.evaluations();
    });

    std::size_t best = 0;
    for (std::size_t s = 1; s < starts; ++s)
        if (local[s].f < local[best].f) best = s;
    const LocalResult& lr = local[best];
    if (!std::isfinite(lr.f)) throw NumericalError("fit: no finite objective value found");

    FitResult out;
    out.theta_hat = proto.natural(lr.x);
    for (std::size_t i = 0; i < k; ++i) out.theta_hat[i] = std::clamp(out.theta_hat[i], box.lo[i], box.hi[i]);
    out.loglik_at_max = -lr.f;
    out.iterations = lr.iterations;
    out.evaluations = std::accumulate(evals.begin(), evals.end(), std::size_t{0});
    out.converged = lr.converged;
    out.method = use_nm ? "nelder-mead" : "projected-bfgs";
    out.objective = opts.objective_label;
    out.permutations = opts.permutations;
    out.alpha = opts.alpha;
    for (std::size_t i = 0; i < k; ++i) {
        const double tol = 1e-7 * (1.0 + std::abs(lr.x(static_cast<Eigen::Index>(i))));
        if (lr.x(static_cast<Eigen::Index>(i)) <= proto.lo()(static_cast<Eigen::Index>(i)) + tol ||
            lr.x(static_cast<Eigen::Index>(i)) >= proto.hi()(static_cast<Eigen::Index>(i)) - tol)
            out.boundary = true;
    }

    std::vector<double> steps = opts.fd_steps.empty() ? default_steps(out.theta_hat) : opts.fd_steps;
    out.hessian = hessian_at(objective, out.theta_hat, steps, opts.hessian, &box);
    const CovarianceResult cr = invert_hessian(out.hessian);
    out.cov = cr.cov;
    out.hessian_pd = cr.positive_definite;
    out.std_errors.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double v = out.cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        out.std_errors[j] = v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    }
    out.intervals = confint(out, opts.alpha);
    return out;
}

}  // namespace prml
