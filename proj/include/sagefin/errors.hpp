#pragma once

#include <stdexcept>
#include <string>

namespace sagefin {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct DegenerateBatch : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct MissingForwardCache : Error { using Error::Error; };
struct ExhaustedSpace : Error { using Error::Error; };
struct EmptyMask : Error { using Error::Error; };
struct InsufficientLabels : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct DanglingEdge : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct UntrainedModel : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
// Thrown when code under a leakage guard touches held-out test masks.
struct TestAccessViolation : Error { using Error::Error; };

}  // namespace sagefin
