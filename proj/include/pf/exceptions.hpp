#pragma once

#include <stdexcept>
#include <string>

namespace pf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Path parameter outside the curve's domain with clamping disabled.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// The curve's first derivative vanished; the tangent frame is undefined.
class DegenerateTangent : public Error {
 public:
  using Error::Error;
};

/// Two candidate closest points are (numerically) equally near but far
/// apart along the curve, e.g. a point at a circle's center.
class AmbiguousProjection : public Error {
 public:
  using Error::Error;
};

/// The projected reference point's speed is undefined (cross-track error
/// reaches the curvature radius, 1 - kappa*y1 ~ 0).
class ProjectionSingularity : public Error {
 public:
  using Error::Error;
};

/// The body-offset interaction matrix cannot be inverted (offset x ~ 0).
class SingularOffset : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared during integration or evaluation.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// A matrix required to have full row rank does not.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Observer pole placement requested a non-negative pole.
class UnstablePoles : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration document; message carries the path to the field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid configuration with inconsistent content.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pf
