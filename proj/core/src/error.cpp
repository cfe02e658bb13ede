#include "dlva/error.hpp"

namespace dlva {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHex: return "MalformedHex";
    case ErrorKind::InconsistentListing: return "InconsistentListing";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::DuplicateAddress: return "DuplicateAddress";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::KernelTooLong: return "KernelTooLong";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyIndex: return "EmptyIndex";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::RpcError: return "RpcError";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::EmptyCode: return "EmptyCode";
    case ErrorKind::Internal: return "Internal";
  }
  return "Error";
}

}  // namespace dlva
