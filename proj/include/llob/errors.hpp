#pragma once

#include <stdexcept>
#include <string>

namespace llob {

// Bad inputs: parameters, grids, regimes, config. The CLI maps these to exit code 2.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct grid_error : input_error {
  using input_error::input_error;
};

struct regime_error : input_error {
  using input_error::input_error;
};

// Failures of a numerical method on valid input. Exit code 3.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct instability_error : numerical_error {
  using numerical_error::numerical_error;
};

struct no_root_error : numerical_error {
  using numerical_error::numerical_error;
};

}  // namespace llob
