#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mvforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidCamera : public Error {
 public:
  using Error::Error;
};

/// The point lies on the principal plane of the camera (|s| below epsilon).
class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

class RayParallelToPlane : public Error {
 public:
  using Error::Error;
};

class InvalidRing : public Error {
 public:
  using Error::Error;
};

class InvalidScene : public Error {
 public:
  using Error::Error;
};

class PlacementInfeasible : public Error {
 public:
  using Error::Error;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the file name, the byte offset at which
/// parsing failed and a description of what was expected there.
class FormatError : public Error {
 public:
  FormatError(std::string file, std::size_t offset, std::string expected)
      : Error(file + ": byte " + std::to_string(offset) + ": " + expected),
        file_(std::move(file)),
        offset_(offset),
        expected_(std::move(expected)) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::string file_;
  std::size_t offset_;
  std::string expected_;
};

}  // namespace mvforge
