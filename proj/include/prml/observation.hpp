#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace prml {

struct Scalar {
    double y = 0.0;
};

/// r replicates of a response with d covariates each; x is row-major r x d.
struct Replicated {
    std::size_t r = 0;
    std::size_t d = 0;
    std::vector<double> x;
    std::vector<double> y;

    Replicated() = default;
    Replicated(std::size_t r_, std::size_t d_, std::vector<double> x_, std::vector<double> y_);

    std::span<const double> row(std::size_t j) const { return {x.data() + j * d, d}; }
};

/// One time series of length T >= 2.
struct Series {
    std::vector<double> y;

    Series() = default;
    explicit Series(std::vector<double> y_);
};

using Observation = std::variant<Scalar, Replicated, Series>;
using Dataset = std::vector<Observation>;

Dataset make_scalar_dataset(std::span<const double> ys);

}  // namespace prml
