#pragma once

#include <stdexcept>
#include <string>

namespace fracfk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A time or space point is not a node of the grid it must live on, or two
// grids that must agree do not.
struct GridMismatch : Error {
  using Error::Error;
};

struct SingularPoint : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct FactorizationError : Error {
  using Error::Error;
};

struct OutOfDomain : Error {
  using Error::Error;
};

struct StabilityError : Error {
  using Error::Error;
};

struct DegenerateSeries : Error {
  using Error::Error;
};

}  // namespace fracfk
