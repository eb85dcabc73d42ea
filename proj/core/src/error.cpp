#include "vsearch/error.hpp"

namespace vsearch {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::IndexFrozen: return "IndexFrozen";
        case ErrorCode::NotFrozen: return "NotFrozen";
        case ErrorCode::TooFewVectors: return "TooFewVectors";
        case ErrorCode::NotTrained: return "NotTrained";
        case ErrorCode::InvalidParam: return "InvalidParam";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::EmptyQuery: return "EmptyQuery";
        case ErrorCode::BackendMissing: return "BackendMissing";
        case ErrorCode::MissingJudgment: return "MissingJudgment";
        case ErrorCode::KMismatch: return "KMismatch";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::RowOutOfRange: return "RowOutOfRange";
        case ErrorCode::DuplicateRow: return "DuplicateRow";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::TypeMismatch: return "TypeMismatch";
        case ErrorCode::Io: return "Io";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::EmbedderError: return "EmbedderError";
    }
    return "Unknown";
}

}  // namespace vsearch
