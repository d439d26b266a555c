#pragma once

#include <stdexcept>
#include <string>

namespace brw {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// walk_kernel
struct AsymmetricKernel : Error {
  using Error::Error;
};
struct NotIrreducible : Error {
  using Error::Error;
};
struct EmptySupport : Error {
  using Error::Error;
};
struct InvalidCoefficients : Error {
  using Error::Error;
};

// green
struct LambdaNonpositive : Error {
  using Error::Error;
};
struct PointOutsideBox : Error {
  using Error::Error;
};
struct HorizonTooLong : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct QuadratureNotConverged : Error {
  using Error::Error;
};
struct DimensionUnsupported : Error {
  using Error::Error;
};

// spectral
struct GridResolutionExhausted : Error {
  using Error::Error;
};
struct WindowTooSmall : Error {
  using Error::Error;
};
struct NotSupercritical : Error {
  using Error::Error;
};

// moments
struct OutOfRange : Error {
  using Error::Error;
};
struct TooLarge : Error {
  using Error::Error;
};

// simulator
struct EmptyPopulation : Error {
  using Error::Error;
};
struct TooFewSurvivors : Error {
  using Error::Error;
};

// cli
struct ParseError : Error {
  using Error::Error;
};

}  // namespace brw
