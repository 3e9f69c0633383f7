#pragma once

#include <stdexcept>
#include <string>

namespace atprep {

// bad or inconsistent user input (config files, serialized operators)
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerical failure: gap closure, eigensolver non-convergence, degenerate fits
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace atprep
