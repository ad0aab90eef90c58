#pragma once

#include <stdexcept>
#include <string>

namespace vec2gc {

/// Bad user input: malformed files, out-of-range parameters, missing data.
/// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A violated internal invariant. The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace vec2gc
