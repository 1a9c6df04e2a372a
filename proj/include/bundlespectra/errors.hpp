#ifndef BUNDLESPECTRA_ERRORS_HPP
#define BUNDLESPECTRA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bspec {

// Rejected input or violated precondition. CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical failure (non-convergence, degenerate system). CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bspec

#endif
