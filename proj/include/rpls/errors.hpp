#pragma once

#include <stdexcept>
#include <string>

namespace rpls {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define RPLS_DEFINE_ERROR(Name)                  \
  struct Name : Error {                          \
    using Error::Error;                          \
    Name() : Error(#Name) {}                     \
  }

RPLS_DEFINE_ERROR(DimensionMismatch);
RPLS_DEFINE_ERROR(BadShape);
RPLS_DEFINE_ERROR(NegativeQuadraticForm);
RPLS_DEFINE_ERROR(DegenerateFactor);
RPLS_DEFINE_ERROR(DegenerateDirection);
RPLS_DEFINE_ERROR(BadGroups);
RPLS_DEFINE_ERROR(ZeroMatrix);
RPLS_DEFINE_ERROR(BadRange);
RPLS_DEFINE_ERROR(BadBandwidth);
RPLS_DEFINE_ERROR(AsymmetricInput);
RPLS_DEFINE_ERROR(NotSymmetric);
RPLS_DEFINE_ERROR(NotPSD);
RPLS_DEFINE_ERROR(DegenerateOperator);
RPLS_DEFINE_ERROR(AllDegenerate);
RPLS_DEFINE_ERROR(NonOrthogonalFactors);
RPLS_DEFINE_ERROR(TooFewSamples);
RPLS_DEFINE_ERROR(SingularFactors);
RPLS_DEFINE_ERROR(SingularCovariance);
RPLS_DEFINE_ERROR(SingletonOrEmptyClass);
RPLS_DEFINE_ERROR(EmptyInput);
RPLS_DEFINE_ERROR(IoError);
RPLS_DEFINE_ERROR(ConfigError);

#undef RPLS_DEFINE_ERROR

// some call sites use the generic name
using DimensionError = DimensionMismatch;

}  // namespace rpls
