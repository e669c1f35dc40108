#include "prml/grid.hpp"

#include "prml/errors.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace prml {

Grid::Grid(std::vector<double> nodes, std::vector<double> weights, std::vector<Interval> bounds)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), bounds_(std::move(bounds)) {
    if (bounds_.empty() || bounds_.size() > 2)
        throw ArgumentError("grid dimension must be 1 or 2");
    if (weights_.size() < 1 || nodes_.size() != weights_.size() * bounds_.size())
        throw ArgumentError("grid nodes and weights disagree in length");
    for (const auto& b : bounds_)
        if (!(b.lo < b.hi)) throw ArgumentError("grid bounds must satisfy lo < hi");
    for (double w : weights_)
        if (!(w > 0.0)) throw ArgumentError("grid weights must be strictly positive");
    for (std::size_t j = 0; j < size(); ++j)
        for (std::size_t d = 0; d < dim(); ++d)
            if (!bounds_[d].contains(nodes_[j * dim() + d]))
                throw ArgumentError("grid node outside bounds");
}

double Grid::volume() const {
    double v = 1.0;
    for (const auto& b : bounds_) v *= b.length();
    return v;
}

double Grid::integrate(std::span<const double> values) const {
    if (values.size() != weights_.size())
        throw ArgumentError("integrate: " + std::to_string(values.size()) + " values for " +
                            std::to_string(weights_.size()) + " nodes");
    return std::transform_reduce(weights_.begin(), weights_.end(), values.begin(), 0.0);
}

double integrate(const Grid& grid, std::span<const double> values) { return grid.integrate(values); }

Grid make_trapezoid_grid(double lo, double hi, std::size_t J) {
    if (!(lo < hi)) throw ArgumentError("trapezoid grid: need lo < hi");
    if (J < 2) throw ArgumentError("trapezoid grid: need at least 2 nodes");
    const double h = (hi - lo) / static_cast<double>(J - 1);
    std::vector<double> nodes(J), weights(J, h);
    for (std::size_t j = 0; j < J; ++j) nodes[j] = lo + h * static_cast<double>(j);
    nodes.back() = hi;
    weights.front() = weights.back() = 0.5 * h;
    return Grid(std::move(nodes), std::move(weights), {{lo, hi}});
}

namespace {

// Legendre P_J(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(std::size_t J, double x) {
    double p0 = 1.0, p1 = x;
    if (J == 0) return {1.0, 0.0};
    for (std::size_t k = 2; k <= J; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
    }
    const double dp = static_cast<double>(J) * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace

Grid make_legendre_grid(double lo, double hi, std::size_t J) {
    if (J == 0) throw ArgumentError("legendre grid: order must be positive");
    if (!(lo < hi)) throw ArgumentError("legendre grid: need lo < hi");
    std::vector<double> nodes(J), weights(J);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    const std::size_t m = (J + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Root i of P_J counted from the right end, refined by Newton.
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(J) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_with_derivative(J, z);
            dp = d;
            const double dz = p / d;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        dp = legendre_with_derivative(J, z).second;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[J - 1 - i] = mid + half * z;
        weights[i] = weights[J - 1 - i] = half * w;
    }
    if (J % 2 == 1) nodes[J / 2] = mid;
    return Grid(std::move(nodes), std::move(weights), {{lo, hi}});
}

Grid make_product_grid(const Grid& first, const Grid& second) {
    if (first.dim() != 1 || second.dim() != 1)
        throw ArgumentError("product grid: both factors must be one-dimensional");
    const std::size_t n1 = first.size(), n2 = second.size();
    std::vector<double> nodes;
    std::vector<double> weights;
    nodes.reserve(2 * n1 * n2);
    weights.reserve(n1 * n2);
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b) {
            nodes.push_back(first.node(a)[0]);
            nodes.push_back(second.node(b)[0]);
            weights.push_back(first.weights()[a] * second.weights()[b]);
        }
    return Grid(std::move(nodes), std::move(weights), {first.bounds()[0], second.bounds()[0]});
}

GridRule parse_grid_rule(const std::string& name) {
    if (name == "trapezoid") return GridRule::trapezoid;
    if (name == "legendre") return GridRule::legendre;
    throw ArgumentError("unknown grid rule '" + name + "'");
}

GridPtr make_grid(const GridSpec& spec) {
    if (spec.bounds.empty() || spec.bounds.size() > 2 || spec.points.size() != spec.bounds.size())
        throw ArgumentError("grid spec: bounds and point counts must both have 1 or 2 entries");
    auto one = [&](std::size_t d) {
        return spec.rule == GridRule::trapezoid
                   ? make_trapezoid_grid(spec.bounds[d].lo, spec.bounds[d].hi, spec.points[d])
                   : make_legendre_grid(spec.bounds[d].lo, spec.bounds[d].hi, spec.points[d]);
    };
    if (spec.bounds.size() == 1) return std::make_shared<const Grid>(one(0));
    return std::make_shared<const Grid>(make_product_grid(one(0), one(1)));
}

double renormalize(const Grid& grid, std::span<double> values) {
    const double total = grid.integrate(values);
    if (!(total > 0.0) || !std::isfinite(total))
        throw ArgumentError("cannot normalize a density with integral " + std::to_string(total));
    for (double& v : values) v /= total;
    return total;
}

GridDensity::GridDensity(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ArgumentError("grid density needs a grid");
    if (values_.size() != grid_->size()) throw ArgumentError("grid density: length mismatch");
    for (double v : values_)
        if (!(v >= 0.0)) throw ArgumentError("grid density values must be nonnegative");
    renormalize(*grid_, values_);
}

GridDensity GridDensity::uniform(GridPtr grid) {
    const std::size_t n = grid->size();
    return GridDensity(std::move(grid), std::vector<double>(n, 1.0));
}

GridDensity GridDensity::renormalized() const { return GridDensity(grid_, values_); }

}  // namespace prml
