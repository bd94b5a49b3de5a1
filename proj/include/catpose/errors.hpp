#pragma once

#include <stdexcept>
#include <string>

namespace catpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A point landed at or behind the camera plane (z <= 1e-9).
class BehindCamera : public Error {
 public:
  using Error::Error;
};

class EmptyDetection : public Error {
 public:
  using Error::Error;
};

/// Fewer than four usable 2D-3D correspondences.
class InsufficientCorrespondences : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class UndefinedViewpoint : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace catpose
