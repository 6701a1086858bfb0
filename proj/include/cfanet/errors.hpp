#pragma once

#include <stdexcept>
#include <string>

namespace cfanet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Batch-norm statistics requested over fewer than two samples.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

/// A mosaic plane has no sample sites to interpolate from.
class EmptyPlaneError : public Error {
 public:
  using Error::Error;
};

/// A CFA whose filters do not span RGB (rank < 3).
class DegeneratePatternError : public Error {
 public:
  using Error::Error;
};

/// Radiance image with I_max == I_min.
class DegenerateRangeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf encountered in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure: cannot open, read or write.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File content is not in the expected format (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Weight or stack file written by an unsupported format version.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// File ended before all declared content was read.
class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Image encoding that the readers do not handle (e.g. 16-bit PNG).
class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace cfanet
