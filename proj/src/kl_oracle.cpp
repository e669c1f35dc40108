#include "prml/kl_oracle.hpp"

#include "prml/errors.hpp"
#include "prml/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace prml {

namespace {

// P[r * J + j] = p(y_r | theta, u_j)
std::vector<double> kernel_matrix(const YQuadrature& yq, const Kernel& kernel, std::span<const double> theta,
                                  const Grid& grid) {
    const std::size_t R = yq.size(), J = grid.size();
    std::vector<double> P(R * J), logp(J);
    for (std::size_t r = 0; r < R; ++r) {
        kernel.log_density(theta, Scalar{yq.y[r]}, grid.nodes(), logp);
        for (std::size_t j = 0; j < J; ++j) P[r * J + j] = std::exp(logp[j]);
    }
    return P;
}

// K for node masses pi_j = a_j f_j; fills mix with m_f(y_r).
double kl_from_masses(const YQuadrature& yq, std::span<const double> P, std::span<const double> pi,
                      std::span<double> mix) {
    const std::size_t J = pi.size();
    double kl = 0.0;
    for (std::size_t r = 0; r < yq.size(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < J; ++j) s += P[r * J + j] * pi[j];
        if (!(s > 0.0)) throw DomainError("mixture density vanishes at y node " + std::to_string(r));
        mix[r] = s;
        if (yq.m[r] > 0.0) kl += yq.b[r] * yq.m[r] * std::log(yq.m[r] / s);
    }
    return kl;
}


// max_j sum_r c_r P_rj / m_f(y_r). Its log bounds the distance of the
// weighted log-likelihood from its maximum (concavity plus Jensen).
double max_directional(std::span<const double> P, std::span<const double> c, std::span<const double> mix,
                       std::size_t J) {
    double best = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        double d = 0.0;
        for (std::size_t r = 0; r < c.size(); ++r) d += c[r] * P[r * J + j] / mix[r];
        best = std::max(best, d);
    }
    return best;
}

// Log-barrier Newton on the simplex for min -sum_r c_r log (P pi)_r,
// warm-started from x. Steps are taken in the scaled variable pi / pi_0 so
// the Newton system stays well conditioned as masses approach zero.
std::vector<double> barrier_newton(std::span<const double> Pflat, std::span<const double> cv,
                                   std::span<const double> x, std::size_t& steps) {
    const Eigen::Index R = static_cast<Eigen::Index>(cv.size()), J = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(Pflat.data(), R, J);
    const Eigen::Map<const Eigen::VectorXd> c(cv.data(), R);
    Eigen::VectorXd pi(J);
    for (Eigen::Index j = 0; j < J; ++j) pi(j) = (1.0 - 1e-10) * x[static_cast<std::size_t>(j)] + 1e-10 / static_cast<double>(J);

    auto phi = [&](const Eigen::VectorXd& p, double mu) {
        const Eigen::VectorXd m = P * p;
        return -(c.array() * m.array().log()).sum() - mu * p.array().log().sum();
    };
    steps = 0;
    for (double mu = 1e-2; mu * static_cast<double>(J) > 1e-14; mu *= 0.1) {
        for (int it = 0; it < 100; ++it) {
            ++steps;
            const Eigen::VectorXd m = P * pi;
            const Eigen::VectorXd g = -(P.transpose() * c.cwiseQuotient(m)) - mu * pi.cwiseInverse();
            const Eigen::VectorXd d2 = c.cwiseQuotient(m.cwiseProduct(m));
            Eigen::MatrixXd H = pi.asDiagonal() * (P.transpose() * d2.asDiagonal() * P) * pi.asDiagonal();
            H.diagonal().array() += mu;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            const Eigen::VectorXd a = ldlt.solve(pi.cwiseProduct(g)), b = ldlt.solve(pi);
            const double lam = -pi.dot(a) / pi.dot(b);
            const Eigen::VectorXd d = -pi.cwiseProduct(a + lam * b);
            const double dec = -g.dot(d);
            if (!(dec > 1e-15)) break;
            double t = 1.0;
            for (Eigen::Index j = 0; j < J; ++j)
                if (d(j) < 0.0) t = std::min(t, -0.99 * pi(j) / d(j));
            const double f0 = phi(pi, mu);
            while (t > 1e-20 && !(phi(pi + t * d, mu) <= f0 - 1e-4 * t * dec)) t *= 0.5;
            if (t <= 1e-20) break;
            pi += t * d;
            pi /= pi.sum();
        }
    }
    return {pi.data(), pi.data() + J};
}

}  // namespace

YQuadrature make_y_quadrature(const std::function<double(double)>& m, double lo, double hi, std::size_t R,
                              double min_coverage) {
    const Grid g = make_legendre_grid(lo, hi, R);
    YQuadrature yq;
    yq.y.assign(g.nodes().begin(), g.nodes().end());
    yq.b.assign(g.weights().begin(), g.weights().end());
    yq.m.resize(R);
    for (std::size_t r = 0; r < R; ++r) {
        yq.m[r] = m(yq.y[r]);
        if (!(yq.m[r] >= 0.0) || !std::isfinite(yq.m[r])) throw DomainError("true density must be finite and >= 0");
        yq.coverage += yq.b[r] * yq.m[r];
    }
    if (yq.coverage < min_coverage)
        throw DomainError("true density has only " + std::to_string(yq.coverage) + " of its mass on the y-interval");
    return yq;
}

double kl_quadrature(const YQuadrature& yq, const GridDensity& f, const Kernel& kernel,
                     std::span<const double> theta) {
    const Grid& grid = f.grid();
    const std::vector<double> P = kernel_matrix(yq, kernel, theta, grid);
    std::vector<double> pi(grid.size()), mix(yq.size());
    for (std::size_t j = 0; j < pi.size(); ++j) pi[j] = grid.weights()[j] * f.values()[j];
    return kl_from_masses(yq, P, pi, mix);
}

KLMinimum minimize_kl(const YQuadrature& yq, const Kernel& kernel, std::span<const double> theta, GridPtr grid,
                      const KLOptions& opts) {
    if (!(opts.tol > 0.0)) throw ArgumentError("minimize_kl: tol must be positive");
    const std::size_t R = yq.size(), J = grid->size();
    const std::vector<double> P = kernel_matrix(yq, kernel, theta, *grid);

    // Weighted "data": c_r proportional to b_r m(y_r), summing to one.
    std::vector<double> c(R);
    for (std::size_t r = 0; r < R; ++r) c[r] = yq.b[r] * yq.m[r] / yq.coverage;

    std::vector<double> mix(R);
    // One EM sweep x -> F(x); mix must hold m_f for x on entry.
    auto em = [&](std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t r = 0; r < R; ++r) {
            const double s = c[r] / mix[r];
            for (std::size_t j = 0; j < J; ++j) out[j] += s * P[r * J + j];
        }
        double total = 0.0;
        for (std::size_t j = 0; j < J; ++j) total += (out[j] *= x[j]);
        for (double& v : out) v /= total;
    };
    auto kl_of = [&](std::span<const double> x) { return kl_from_masses(yq, P, x, mix); };

    const double vol = grid->volume();
    std::vector<double> x0(J), x1(J), x2(J), xs(J), xn(J), r(J), v(J);
    for (std::size_t j = 0; j < J; ++j) x0[j] = grid->weights()[j] / vol;

    KLMinimum out{GridDensity::uniform(grid)};
    double kl = kl_of(x0);
    std::size_t sweeps = 0;
    // SQUAREM cycles: two EM sweeps, a squared extrapolation, one stabilizing
    // sweep. The extrapolated point is kept only if it beats the plain EM iterate.
    while (sweeps < opts.max_iter) {
        (void)kl_of(x0);
        em(x0, x1);
        const double k1 = kl_of(x1);
        em(x1, x2);
        const double k2 = kl_of(x2);
        sweeps += 2;
        double rr = 0.0, vv = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            r[j] = x1[j] - x0[j];
            v[j] = x2[j] - x1[j] - r[j];
            rr += r[j] * r[j];
            vv += v[j] * v[j];
        }
        double knew = k2;
        std::vector<double>* best = &x2;
        if (vv > 0.0) {
            double alpha = std::min(-1.0, -std::sqrt(rr / vv));
            for (int tries = 0; tries < 30 && alpha < -1.0; ++tries) {
                bool ok = true;
                double total = 0.0;
                for (std::size_t j = 0; j < J && ok; ++j) {
                    xs[j] = x0[j] - 2.0 * alpha * r[j] + alpha * alpha * v[j];
                    ok = xs[j] > 0.0;
                    total += xs[j];
                }
                if (ok) {
                    for (double& e : xs) e /= total;
                    (void)kl_of(xs);
                    em(xs, xn);
                    ++sweeps;
                    const double ks = kl_of(xn);
                    if (ks < k2) {
                        knew = ks;
                        best = &xn;
                    }
                    break;
                }
                alpha = 0.5 * (alpha - 1.0);
            }
        }
        out.max_increase = std::max({out.max_increase, k1 - kl, k2 - k1});
        if (out.max_increase > 1e-13 + 1e-12 * std::abs(kl))
            throw NumericalError("minimize_kl: EM sweep increased K by " + std::to_string(out.max_increase));
        const double drop = kl - knew;
        x0.swap(*best);
        kl = knew;
        if (drop < opts.tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = sweeps;

    if (opts.polish) {
        std::vector<double> xp = barrier_newton(P, c, x0, out.newton_steps);
        const double kp = kl_of(xp);
        if (kp < kl) {
            x0.swap(xp);
            kl = kp;
        }
    }

    kl = kl_of(x0);
    out.gap_bound = yq.coverage * std::log(std::max(1.0, max_directional(P, c, mix, J)));
    if (opts.polish && out.gap_bound < opts.tol) out.converged = true;
    std::vector<double> f(J);
    for (std::size_t j = 0; j < J; ++j) f[j] = x0[j] / grid->weights()[j];
    out.f = GridDensity(grid, std::move(f));
    out.kstar = kl;
    return out;
}

std::vector<KStarPoint> kstar_curve(const YQuadrature& yq, const Kernel& kernel, std::span<const double> thetas,
                                    GridPtr grid, const KLOptions& opts) {
    if (kernel.theta_dim() != 1) throw ArgumentError("kstar_curve: kernel must have a scalar theta");
    std::vector<KStarPoint> out(thetas.size());
    parallel_for(thetas.size(), [&](std::size_t t) {
        const double th[] = {thetas[t]};
        const KLMinimum r = minimize_kl(yq, kernel, th, grid, opts);
        out[t] = {thetas[t], r.kstar, r.iterations, r.converged};
    });
    return out;
}

void write_kstar_csv(std::ostream& os, const KStarHeader& h, const std::vector<KStarPoint>& points) {
    os << "# J=" << h.J << ",R=" << h.R << ",tol=" << h.tol << ",commit=" << h.commit << '\n';
    os << "sigma,kstar\n" << std::setprecision(17);
    for (const auto& p : points) os << p.theta << ',' << p.kstar << '\n';
}

std::vector<KStarPoint> read_kstar_csv(std::istream& is, KStarHeader* header) {
    std::vector<KStarPoint> out;
    std::string line;
    std::size_t lineno = 0;
    bool seen_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!header) continue;
            std::istringstream ss(line.substr(1));
            std::string field;
            while (std::getline(ss, field, ',')) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                std::string key = field.substr(0, eq), val = field.substr(eq + 1);
                key.erase(0, key.find_first_not_of(' '));
                if (key == "J") header->J = std::stoul(val);
                else if (key == "R") header->R = std::stoul(val);
                else if (key == "tol") header->tol = std::stod(val);
                else if (key == "commit") header->commit = val;
            }
            continue;
        }
        if (!seen_columns) {
            if (line != "sigma,kstar") throw ArgumentError("line " + std::to_string(lineno) + ": expected header sigma,kstar");
            seen_columns = true;
            continue;
        }
        std::istringstream ss(line);
        KStarPoint p;
        char comma = 0;
        if (!(ss >> p.theta >> comma >> p.kstar) || comma != ',')
            throw ArgumentError("line " + std::to_string(lineno) + ": expected sigma,kstar");
        p.converged = true;
        out.push_back(p);
    }
    return out;
}

}  // namespace prml
