#pragma once

#include <stdexcept>
#include <string>

namespace dlva {

enum class ErrorKind {
  // input / format
  MalformedHex,
  InconsistentListing,
  MalformedRecord,
  DuplicateAddress,
  IoError,
  BadMagic,
  VersionMismatch,
  ChecksumMismatch,
  // numeric contracts
  ShapeMismatch,
  KernelTooLong,
  DimensionMismatch,
  LengthMismatch,
  EmptyMatrix,
  DegenerateClass,
  // datasets / indices
  EmptyCorpus,
  EmptyDataset,
  EmptyIndex,
  MissingLabels,
  // network
  RpcError,
  Timeout,
  EmptyCode,
  Internal,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // true for failures caused by user-supplied input rather than bugs
  bool is_input_error() const { return kind_ != ErrorKind::Internal; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dlva
