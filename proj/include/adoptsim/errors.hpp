#pragma once

#include <stdexcept>
#include <string>

namespace adoptsim {

// Malformed input files or configuration contract violations. The CLI maps
// this to exit code 1; every other exception lands at exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Network construction could not satisfy its constraints (e.g. a homophily
// target that leaves stubs with no admissible partner).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adoptsim
