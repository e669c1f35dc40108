#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prml {

/// Invalid argument shape or value supplied by the caller.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parameter outside the domain of a kernel or distribution.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A kernel was asked for a capability it does not provide (gradient, null component).
class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Predictive density vanished on the whole grid for one observation.
class DegenerateObservation : public std::runtime_error {
public:
    DegenerateObservation(std::size_t index, const std::string& what)
        : std::runtime_error("observation " + std::to_string(index) + ": " + what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Objective returned NaN during optimization.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace prml
