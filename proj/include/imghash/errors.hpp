#pragma once

#include <stdexcept>
#include <string>

namespace imghash {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bytes on disk or on the wire do not follow the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's domain (empty point set, k mismatch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A region or filter reaches outside the image.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Sender and receiver disagree on detector/clustering configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The image has no keypoints, so no hash can be formed.
class HashGenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace imghash
