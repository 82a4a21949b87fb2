#pragma once

#include <stdexcept>
#include <string>

namespace taucover {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TAUCOVER_ERROR(Name)                                              \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what = {}) : Error(#Name, what) {}   \
  }

TAUCOVER_ERROR(DimensionMismatch);
TAUCOVER_ERROR(ParseError);
TAUCOVER_ERROR(NotExact);
TAUCOVER_ERROR(InhomogeneousSuperDegree);
TAUCOVER_ERROR(NonPositiveDegreeShift);
TAUCOVER_ERROR(NonSymmetricMetric);
TAUCOVER_ERROR(DegenerateMetric);
TAUCOVER_ERROR(DegenerateSpectrum);
TAUCOVER_ERROR(ComplexSpectrum);
TAUCOVER_ERROR(ZeroDiagonalEntry);
TAUCOVER_ERROR(NotWDVV);
TAUCOVER_ERROR(MissingEuler);
TAUCOVER_ERROR(NonInvertibleB);
TAUCOVER_ERROR(RecursionInconsistent);
TAUCOVER_ERROR(DivisionMismatch);
TAUCOVER_ERROR(OrthogonalityViolation);
TAUCOVER_ERROR(CoincidingVelocities);
TAUCOVER_ERROR(BreakingDetected);
TAUCOVER_ERROR(MissingFixture);

#undef TAUCOVER_ERROR

}  // namespace taucover
