#include "prml/params.hpp"

#include "prml/errors.hpp"

#include <cmath>

namespace prml {

double to_internal(Transform t, double natural) {
    switch (t) {
        case Transform::identity: return natural;
        case Transform::log:
            if (!(natural > 0.0)) throw DomainError("log transform needs a positive value");
            return std::log(natural);
        case Transform::logit:
            if (!(natural > 0.0 && natural < 1.0)) throw DomainError("logit transform needs a value in (0,1)");
            return std::log(natural) - std::log1p(-natural);
    }
    return natural;
}

double to_natural(Transform t, double internal) {
    switch (t) {
        case Transform::identity: return internal;
        case Transform::log: return std::exp(internal);
        case Transform::logit:
            return internal >= 0.0 ? 1.0 / (1.0 + std::exp(-internal))
                                   : std::exp(internal) / (1.0 + std::exp(internal));
    }
    return internal;
}

double natural_jacobian(Transform t, double internal) {
    switch (t) {
        case Transform::identity: return 1.0;
        case Transform::log: return std::exp(internal);
        case Transform::logit: {
            const double p = to_natural(t, internal);
            return p * (1.0 - p);
        }
    }
    return 1.0;
}

const char* transform_name(Transform t) {
    switch (t) {
        case Transform::identity: return "identity";
        case Transform::log: return "log";
        case Transform::logit: return "logit";
    }
    return "?";
}

bool Box::contains(std::span<const double> theta) const {
    if (theta.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
        if (!(theta[k] >= lo[k] && theta[k] <= hi[k])) return false;
    return true;
}

void Box::validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw ArgumentError("box bounds must be nonempty and equal length");
    for (std::size_t k = 0; k < dim(); ++k)
        if (!(std::isfinite(lo[k]) && std::isfinite(hi[k]) && lo[k] < hi[k]))
            throw ArgumentError("box component " + std::to_string(k) + " must be finite with lo < hi");
}

}  // namespace prml
