#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace prml {

/// PR weights w_1, w_2, ... in (0, 1).
///
/// Either the power rule w_i = (i + 1)^(-gamma) with gamma in (1/2, 1], or
/// the Dirichlet-process rule w_i = 1 / (1 + alpha_{i-1}) for a precision
/// schedule alpha_0, alpha_1, ....
class WeightSequence {
public:
    static WeightSequence power(double gamma = 2.0 / 3.0);
    /// Finite schedule; the sequence has alphas.size() weights.
    static WeightSequence dirichlet(std::vector<double> alphas);
    /// alpha_i = alpha0 + i, the precision of a DP posterior after i draws.
    static WeightSequence dirichlet_growing(double alpha0);

    /// Weight for step i >= 1.
    double operator()(std::size_t i) const;

    /// Number of available weights; empty when unbounded.
    std::optional<std::size_t> length() const;

    std::string describe() const;

private:
    enum class Rule { power, dirichlet, dirichlet_growing };
    Rule rule_ = Rule::power;
    double param_ = 2.0 / 3.0;
    std::vector<double> alphas_;
};

struct WeightSpec {
    std::string rule = "power";  // power | dp
    double gamma = 2.0 / 3.0;
    double alpha0 = 1.0;
};

WeightSequence make_weights(const WeightSpec& spec);

}  // namespace prml
