#include "prml/weights.hpp"

#include "prml/errors.hpp"

#include <cmath>
#include <sstream>

namespace prml {

WeightSequence WeightSequence::power(double gamma) {
    if (!(gamma > 0.5 && gamma <= 1.0)) throw ArgumentError("weight exponent gamma must lie in (1/2, 1]");
    WeightSequence w;
    w.rule_ = Rule::power;
    w.param_ = gamma;
    return w;
}

WeightSequence WeightSequence::dirichlet(std::vector<double> alphas) {
    for (double a : alphas)
        if (!(a > 0.0) || !std::isfinite(a)) throw ArgumentError("DP precision values must be positive");
    WeightSequence w;
    w.rule_ = Rule::dirichlet;
    w.alphas_ = std::move(alphas);
    return w;
}

WeightSequence WeightSequence::dirichlet_growing(double alpha0) {
    if (!(alpha0 > 0.0)) throw ArgumentError("DP precision alpha0 must be positive");
    WeightSequence w;
    w.rule_ = Rule::dirichlet_growing;
    w.param_ = alpha0;
    return w;
}

double WeightSequence::operator()(std::size_t i) const {
    if (i == 0) throw ArgumentError("weights are indexed from 1");
    switch (rule_) {
        case Rule::power: return std::pow(static_cast<double>(i + 1), -param_);
        case Rule::dirichlet:
            if (i > alphas_.size()) throw ArgumentError("weight schedule exhausted at step " + std::to_string(i));
            return 1.0 / (1.0 + alphas_[i - 1]);
        case Rule::dirichlet_growing: return 1.0 / (1.0 + param_ + static_cast<double>(i - 1));
    }
    return 0.0;
}

std::optional<std::size_t> WeightSequence::length() const {
    if (rule_ == Rule::dirichlet) return alphas_.size();
    return std::nullopt;
}

std::string WeightSequence::describe() const {
    std::ostringstream os;
    switch (rule_) {
        case Rule::power: os << "power(gamma=" << param_ << ")"; break;
        case Rule::dirichlet: os << "dp(schedule of " << alphas_.size() << ")"; break;
        case Rule::dirichlet_growing: os << "dp(alpha0=" << param_ << ")"; break;
    }
    return os.str();
}

WeightSequence make_weights(const WeightSpec& spec) {
    if (spec.rule == "power") return WeightSequence::power(spec.gamma);
    if (spec.rule == "dp") return WeightSequence::dirichlet_growing(spec.alpha0);
    throw ArgumentError("unknown weight rule '" + spec.rule + "'");
}

}  // namespace prml
