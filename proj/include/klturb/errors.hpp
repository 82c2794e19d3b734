#pragma once

#include <stdexcept>
#include <string>

namespace klturb {

/// Bad user input: out-of-range parameters, mismatched sizes, malformed files.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Internal numerical failure (asymmetric kernel matrix, eigensolver trouble, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace klturb
