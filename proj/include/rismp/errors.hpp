#pragma once

#include <stdexcept>
#include <string>

namespace rismp {

// Malformed input file or unparseable value.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a documented invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A constraint system with no feasible point (e.g. the delay budget cannot
// be met even by the smallest models).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rismp
