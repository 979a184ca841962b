#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cryocurate {

enum class ErrorCode {
  InvalidArgument,
  PermissionDenied,
  IoError,
  // fetcher
  NotFoundInAnyDatabase,
  TransportError,
  UnrecognizedIdFormat,
  NotFetched,
  // structmodel
  MalformedStructure,
  InvalidRange,
  // archive
  EntryNotFound,
  XmlParseError,
  BadPattern,
  DirectoryNotFound,
  NoMatches,
  IndexOutOfRange,
  // imgformats
  DecodeError,
  BadMagic,
  UnsupportedMode,
  TruncatedData,
  UnsupportedDtype,
  StarSyntaxError,
  BadNpyHeader,
  FortranOrderUnsupported,
  // dataset
  EmptyDataset,
  UnknownClassInStrictMode,
  ClassTooSmall,
  ShapeMismatch,
  InvalidTransform,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. The code identifies the failure
/// class; what() carries the human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for every failure raised while decoding an image container.
  bool is_decode_error() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace cryocurate
