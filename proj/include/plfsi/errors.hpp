#pragma once

#include <stdexcept>
#include <string>

namespace plfsi {

// Malformed or inconsistent user input. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure (rank deficiency, optimizer failure, degenerate data).
// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace plfsi
