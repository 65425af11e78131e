#pragma once

#include <stdexcept>
#include <string>

namespace jpath {

// Base class for every failure the library reports.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input / validation failures.
struct DimensionMismatch : Error { using Error::Error; };
struct NegativeRate : Error { using Error::Error; };
struct RowSumExceedsOne : Error { using Error::Error; };
struct NonErgodic : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

// Linear-algebra failures.
struct SingularSystem : Error { using Error::Error; };
struct SingularSubsystem : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct DegenerateMinor : Error { using Error::Error; };

// Evaluation / solver failures.
struct OverflowError : Error { using Error::Error; };
struct InvalidAlpha : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NoValidFace : Error { using Error::Error; };
struct NonConvergent : Error { using Error::Error; };
struct WrongDimension : Error { using Error::Error; };
struct TooManyFaces : Error { using Error::Error; };

}  // namespace jpath
