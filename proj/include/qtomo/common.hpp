#pragma once

#include <stdexcept>
#include <string>

namespace qtomo {

// Root of the error hierarchy. Every failure mode the library reports is a
// subclass, so callers can catch qtomo::Error at the boundary and map it to
// a diagnostic plus nonzero exit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct TraceNotOne : Error { using Error::Error; };
struct NotInvertible : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct Divergence : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct InvalidPair : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };
struct AllUsed : Error { using Error::Error; };
struct UnsupportedCombination : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace qtomo
