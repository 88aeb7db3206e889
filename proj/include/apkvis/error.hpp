#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apkvis {

enum class ErrorCode {
    IoError,
    NotAZip,
    TruncatedArchive,
    EntryNotFound,
    ChecksumMismatch,
    UnsupportedCompressionMethod,
    NoDexFound,
    NotAxml,
    TruncatedChunk,
    StringIndexOutOfRange,
    MalformedAttribute,
    MalformedXml,
    EmptyInput,
    InvalidArgument,
    InvalidImage,
    EndpointUnreachable,
    MalformedResponse,
    StubMiss,
    ConfigError,
    UnlabeledSample,
    DuplicateSampleId,
    MissingImage,
    EmptyManifest,
    MalformedManifest,
    EmptyPredictions,
    MalformedPredictions,
    SingleClassOnly,
    MissingScores,
    SingleClassTrainingSet,
    NonFiniteLoss,
    DimensionMismatch,
    MalformedModel,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotAZip: return "NotAZip";
    case ErrorCode::TruncatedArchive: return "TruncatedArchive";
    case ErrorCode::EntryNotFound: return "EntryNotFound";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::UnsupportedCompressionMethod: return "UnsupportedCompressionMethod";
    case ErrorCode::NoDexFound: return "NoDexFound";
    case ErrorCode::NotAxml: return "NotAxml";
    case ErrorCode::TruncatedChunk: return "TruncatedChunk";
    case ErrorCode::StringIndexOutOfRange: return "StringIndexOutOfRange";
    case ErrorCode::MalformedAttribute: return "MalformedAttribute";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::StubMiss: return "StubMiss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnlabeledSample: return "UnlabeledSample";
    case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::EmptyPredictions: return "EmptyPredictions";
    case ErrorCode::MalformedPredictions: return "MalformedPredictions";
    case ErrorCode::SingleClassOnly: return "SingleClassOnly";
    case ErrorCode::MissingScores: return "MissingScores";
    case ErrorCode::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedModel: return "MalformedModel";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// batch drivers can report and classify per-file errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace apkvis
