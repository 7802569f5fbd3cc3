#pragma once

#include <stdexcept>
#include <string>

namespace ofz {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: usage errors -> 1, data errors -> 2, anything else -> 3.
enum class ErrorCode {
    MalformedImage,
    AddressOutOfRange,
    ImageTooLarge,
    CriticalEdgesPresent,
    UnknownBlock,
    InvalidSeed,
    NotACrash,
    EmptySamples,
    ChecksumMismatch,
    MismatchedDatasets,
    NonPositiveModel,
    SizeTooSmall,
    IoError,
    UsageError,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::MalformedImage: return "MalformedImage";
        case ErrorCode::AddressOutOfRange: return "AddressOutOfRange";
        case ErrorCode::ImageTooLarge: return "ImageTooLarge";
        case ErrorCode::CriticalEdgesPresent: return "CriticalEdgesPresent";
        case ErrorCode::UnknownBlock: return "UnknownBlock";
        case ErrorCode::InvalidSeed: return "InvalidSeed";
        case ErrorCode::NotACrash: return "NotACrash";
        case ErrorCode::EmptySamples: return "EmptySamples";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::MismatchedDatasets: return "MismatchedDatasets";
        case ErrorCode::NonPositiveModel: return "NonPositiveModel";
        case ErrorCode::SizeTooSmall: return "SizeTooSmall";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

}  // namespace ofz
