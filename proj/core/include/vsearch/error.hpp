#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsearch {

enum class ErrorCode {
    ZeroVector,
    NonFinite,
    DimMismatch,
    DuplicateId,
    IndexFrozen,
    NotFrozen,
    TooFewVectors,
    NotTrained,
    InvalidParam,
    CapacityExceeded,
    EmptyQuery,
    BackendMissing,
    MissingJudgment,
    KMismatch,
    Empty,
    BadMagic,
    TruncatedFile,
    CorruptFile,
    VersionUnsupported,
    RowOutOfRange,
    DuplicateRow,
    ChecksumMismatch,
    TypeMismatch,
    Io,
    ParseError,
    ConfigError,
    EmbedderError,
};

/// Stable machine-readable name, e.g. "DimMismatch". Used by the CLI error line.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace vsearch
