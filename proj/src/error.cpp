#include "cryocurate/error.hpp"

namespace cryocurate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotFoundInAnyDatabase: return "NotFoundInAnyDatabase";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::UnrecognizedIdFormat: return "UnrecognizedIdFormat";
    case ErrorCode::NotFetched: return "NotFetched";
    case ErrorCode::MalformedStructure: return "MalformedStructure";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::EntryNotFound: return "EntryNotFound";
    case ErrorCode::XmlParseError: return "XmlParseError";
    case ErrorCode::BadPattern: return "BadPattern";
    case ErrorCode::DirectoryNotFound: return "DirectoryNotFound";
    case ErrorCode::NoMatches: return "NoMatches";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::StarSyntaxError: return "StarSyntaxError";
    case ErrorCode::BadNpyHeader: return "BadNpyHeader";
    case ErrorCode::FortranOrderUnsupported: return "FortranOrderUnsupported";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownClassInStrictMode: return "UnknownClassInStrictMode";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
  }
  return "Unknown";
}

bool Error::is_decode_error() const noexcept {
  switch (code_) {
    case ErrorCode::DecodeError:
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedMode:
    case ErrorCode::TruncatedData:
    case ErrorCode::StarSyntaxError:
    case ErrorCode::BadNpyHeader:
    case ErrorCode::FortranOrderUnsupported:
      return true;
    default:
      return false;
  }
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cryocurate
