#pragma once

#include <stdexcept>
#include <string>

namespace headgs {

/// Base class for all engine errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class AssetError : public Error {
 public:
  using Error::Error;
};

class DegenerateTriangleError : public Error {
 public:
  DegenerateTriangleError(const std::string& what, long face = -1)
      : Error(what), face_(face) {}
  long face() const noexcept { return face_; }

 private:
  long face_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFileError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class StaleIntermediatesError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace headgs
