#pragma once

#include <stdexcept>

namespace elcont {

/// Error with a user-facing diagnostic; thrown on violated preconditions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace elcont
