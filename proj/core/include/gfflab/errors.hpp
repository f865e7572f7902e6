#pragma once

#include <stdexcept>
#include <string>

namespace gfflab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a restricted Laplacian is singular (no killing reachable).
struct SingularSystemError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

}  // namespace gfflab
