#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prml {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Quadrature grid over a box in one or two dimensions.
///
/// Nodes are stored node-major: node j occupies coordinates
/// [j * dim(), (j + 1) * dim()). Weights integrate against Lebesgue
/// measure on the box, so integrate(1) equals the box volume.
class Grid {
public:
    Grid(std::vector<double> nodes, std::vector<double> weights, std::vector<Interval> bounds);

    std::size_t size() const { return weights_.size(); }
    std::size_t dim() const { return bounds_.size(); }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> node(std::size_t j) const { return {nodes_.data() + j * dim(), dim()}; }
    std::span<const double> weights() const { return weights_; }
    const std::vector<Interval>& bounds() const { return bounds_; }

    double volume() const;

    /// Sum of weights[j] * values[j].
    double integrate(std::span<const double> values) const;

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<Interval> bounds_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// J equally spaced nodes with trapezoid weights.
Grid make_trapezoid_grid(double lo, double hi, std::size_t J);

/// Gauss-Legendre rule of order J mapped onto [lo, hi].
Grid make_legendre_grid(double lo, double hi, std::size_t J);

/// Tensor product of two one-dimensional grids; the first grid varies slowest.
Grid make_product_grid(const Grid& first, const Grid& second);

double integrate(const Grid& grid, std::span<const double> values);

enum class GridRule { trapezoid, legendre };

GridRule parse_grid_rule(const std::string& name);

/// Declarative description of a grid as it appears in config files.
struct GridSpec {
    GridRule rule = GridRule::trapezoid;
    std::vector<Interval> bounds{{0.0, 1.0}};
    std::vector<std::size_t> points{201};
};

GridPtr make_grid(const GridSpec& spec);

/// Nonnegative function values on a grid, normalized to integrate to one.
class GridDensity {
public:
    /// Normalizes values; throws if they are negative or integrate to zero.
    GridDensity(GridPtr grid, std::vector<double> values);

    static GridDensity uniform(GridPtr grid);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> values() const { return values_; }

    double integral() const { return grid_->integrate(values_); }

    /// Copy rescaled to unit integral.
    GridDensity renormalized() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Divides values in place by their quadrature integral. Returns the integral
/// before rescaling. Throws ArgumentError if it is not positive.
double renormalize(const Grid& grid, std::span<double> values);

}  // namespace prml
