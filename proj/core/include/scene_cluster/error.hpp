#pragma once

#include <stdexcept>
#include <string>

namespace scene_cluster {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition (shape, range, format).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, decoded or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scene_cluster
