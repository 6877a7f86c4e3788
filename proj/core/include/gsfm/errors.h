#pragma once

#include <stdexcept>
#include <string>

namespace gsfm {

// Malformed or inconsistent input (files, arguments, preconditions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-formed input that could not be reconstructed.
class ReconstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsfm
