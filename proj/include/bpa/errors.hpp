#pragma once

#include <stdexcept>
#include <string>

namespace bpa {

/// Input violated a documented precondition (bad file, bad range, bad frame).
class InvalidInputError : public std::invalid_argument {
public:
  explicit InvalidInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// The requested quantity is not uniquely defined for this input
/// (collinear point sets, non-unique distribution mode, ...).
class DegenerateError : public std::runtime_error {
public:
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bpa
