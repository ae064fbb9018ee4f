#pragma once

#include <stdexcept>
#include <string>

namespace hkt {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent run configuration. The message names the field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not proceed (singular system, non-finite state, CFL violation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Noise draw outside the admissible support of an interaction; the caller resamples.
class RejectedDraw : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace hkt
