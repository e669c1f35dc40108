#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace prml {

/// Map from a natural-scale parameter component to the unconstrained scale
/// the optimizer works on.
enum class Transform { identity, log, logit };

double to_internal(Transform t, double natural);
double to_natural(Transform t, double internal);
/// d(natural) / d(internal) at the given internal value.
double natural_jacobian(Transform t, double internal);

const char* transform_name(Transform t);

/// Axis-aligned box on the natural scale of a structural parameter.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const { return lo.size(); }
    bool contains(std::span<const double> theta) const;
    void validate() const;
};

}  // namespace prml
