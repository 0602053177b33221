#pragma once

#include <stdexcept>
#include <string>

namespace qnmf {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A normal-equation system is singular (or numerically so) and could not be
/// rescued.
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quality metric has a zero reference norm.
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed, truncated or unsupported file contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qnmf
