#include "prml/observation.hpp"

#include "prml/errors.hpp"

namespace prml {

Replicated::Replicated(std::size_t r_, std::size_t d_, std::vector<double> x_, std::vector<double> y_)
    : r(r_), d(d_), x(std::move(x_)), y(std::move(y_)) {
    if (r == 0) throw ArgumentError("replicated observation needs at least one replicate");
    if (y.size() != r || x.size() != r * d)
        throw ArgumentError("replicated observation: covariate rows must match response length");
}

Series::Series(std::vector<double> y_) : y(std::move(y_)) {
    if (y.size() < 2) throw ArgumentError("series observation needs T >= 2");
}

Dataset make_scalar_dataset(std::span<const double> ys) {
    Dataset data;
    data.reserve(ys.size());
    for (double y : ys) data.emplace_back(Scalar{y});
    return data;
}

}  // namespace prml
