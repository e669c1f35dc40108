#pragma once

#include "prml/grid.hpp"
#include "prml/kernels.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace prml {

/// Gauss-Legendre rule over a y-interval with the true density cached at the nodes.
struct YQuadrature {
    std::vector<double> y;   ///< nodes
    std::vector<double> b;   ///< weights
    std::vector<double> m;   ///< true density at the nodes
    double coverage = 0.0;   ///< sum_r b_r m(y_r)

    std::size_t size() const { return y.size(); }
};

/// Builds the rule and checks that the true density puts at least
/// `min_coverage` of its mass on [lo, hi]; throws DomainError otherwise.
YQuadrature make_y_quadrature(const std::function<double(double)>& m, double lo = -0.5, double hi = 1.5,
                              std::size_t R = 101, double min_coverage = 0.99);

/// sum_r b_r m(y_r) log{ m(y_r) / m_f(y_r) } for a scalar-observation kernel.
/// Throws DomainError naming the node when m_f vanishes there.
double kl_quadrature(const YQuadrature& yq, const GridDensity& f, const Kernel& kernel,
                     std::span<const double> theta);

struct KLOptions {
    double tol = 1e-9;          ///< stop when one sweep lowers K by less than this
    std::size_t max_iter = 10000;  ///< EM sweeps
    /// Finish with log-barrier Newton steps on the same objective; kept only if they lower K.
    bool polish = true;
};

struct KLMinimum {
    GridDensity f;
    double kstar = 0.0;
    std::size_t iterations = 0;     ///< EM sweeps
    std::size_t newton_steps = 0;
    bool converged = false;
    double gap_bound = 0.0;         ///< certified upper bound on kstar - min K
    double max_increase = 0.0;      ///< largest increase over one EM sweep (roundoff only)
};

/// Minimizes kl_quadrature over densities on `grid` by the multiplicative
/// mixture-weights EM update (SQUAREM-accelerated), started from the uniform
/// density, then optionally polished by Newton steps.
KLMinimum minimize_kl(const YQuadrature& yq, const Kernel& kernel, std::span<const double> theta, GridPtr grid,
                      const KLOptions& opts = {});

struct KStarPoint {
    double theta = 0.0;
    double kstar = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// K*(theta) over a list of scalar theta values, evaluated in parallel.
std::vector<KStarPoint> kstar_curve(const YQuadrature& yq, const Kernel& kernel, std::span<const double> thetas,
                                    GridPtr grid, const KLOptions& opts = {});

/// Provenance written into a K* curve file.
struct KStarHeader {
    std::size_t J = 0;
    std::size_t R = 0;
    double tol = 0.0;
    std::string commit;
};

/// CSV with "# J=..,R=..,tol=..,commit=.." then `sigma,kstar` rows.
void write_kstar_csv(std::ostream& os, const KStarHeader& header, const std::vector<KStarPoint>& points);
/// Inverse of write_kstar_csv; throws ArgumentError with the line number on malformed input.
std::vector<KStarPoint> read_kstar_csv(std::istream& is, KStarHeader* header = nullptr);

}  // namespace prml
