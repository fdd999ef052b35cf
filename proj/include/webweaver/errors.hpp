#pragma once

#include <stdexcept>
#include <string>

namespace webweaver {

// Classified error kinds used across the engine. Each operation documents
// which kinds it can raise; nothing else escapes.
enum class ErrorKind {
    // turn grammar / trace log
    MalformedTag,
    MalformedPayload,
    RoleViolation,
    AmbiguousAction,
    CorruptRecord,
    SequenceGap,
    InvariantViolation,
    // memory bank
    EmptySummary,
    UnknownId,
    CorruptBank,
    VersionMismatch,
    // gateway
    TransportError,
    AuthError,
    ProviderRefusal,
    BudgetExceeded,
    ScriptExhausted,
    NetworkRefused,
    // search pipeline
    SearchProviderError,
    FetchError,
    DigestFailure,
    // planner
    NoOutline,
    MaxTurnsExceeded,
    UnparseableOutline,
    MalformedCitationTag,
    // writer
    EmptyReport,
    // evaluation
    MalformedJudgeResponse,
    RatingOutOfRange,
    // generic
    InvalidArgument,
    IoError,
    ConfigError,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedTag: return "MalformedTag";
        case ErrorKind::MalformedPayload: return "MalformedPayload";
        case ErrorKind::RoleViolation: return "RoleViolation";
        case ErrorKind::AmbiguousAction: return "AmbiguousAction";
        case ErrorKind::CorruptRecord: return "CorruptRecord";
        case ErrorKind::SequenceGap: return "SequenceGap";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::EmptySummary: return "EmptySummary";
        case ErrorKind::UnknownId: return "UnknownId";
        case ErrorKind::CorruptBank: return "CorruptBank";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::TransportError: return "TransportError";
        case ErrorKind::AuthError: return "AuthError";
        case ErrorKind::ProviderRefusal: return "ProviderRefusal";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::ScriptExhausted: return "ScriptExhausted";
        case ErrorKind::NetworkRefused: return "NetworkRefused";
        case ErrorKind::SearchProviderError: return "SearchProviderError";
        case ErrorKind::FetchError: return "FetchError";
        case ErrorKind::DigestFailure: return "DigestFailure";
        case ErrorKind::NoOutline: return "NoOutline";
        case ErrorKind::MaxTurnsExceeded: return "MaxTurnsExceeded";
        case ErrorKind::UnparseableOutline: return "UnparseableOutline";
        case ErrorKind::MalformedCitationTag: return "MalformedCitationTag";
        case ErrorKind::EmptyReport: return "EmptyReport";
        case ErrorKind::MalformedJudgeResponse: return "MalformedJudgeResponse";
        case ErrorKind::RatingOutOfRange: return "RatingOutOfRange";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace webweaver
