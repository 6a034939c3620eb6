#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tempocause {

enum class Errc {
    Io,
    RaggedRows,
    NonMonotonicTime,
    NoUsableColumns,
    TooFewRows,
    ParseError,
    UnknownVariable,
    KindMismatch,
    InvalidConstraint,
    InvalidWindow,
    LengthMismatch,
    EmptyInput,
    PreconditionViolation,
    NoOccurrences,
    AllMissingInWindow,
    InsufficientCauses,
    EmptyCauseSet,
    NoEvidence,
    InvalidConfig,
    CycleRejected,
    SchemaError,
    UnknownNode,
    InvalidRole,
    UnknownScenario,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
    case Errc::Io: return "Io";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::NonMonotonicTime: return "NonMonotonicTime";
    case Errc::NoUsableColumns: return "NoUsableColumns";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::InvalidConstraint: return "InvalidConstraint";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::NoOccurrences: return "NoOccurrences";
    case Errc::AllMissingInWindow: return "AllMissingInWindow";
    case Errc::InsufficientCauses: return "InsufficientCauses";
    case Errc::EmptyCauseSet: return "EmptyCauseSet";
    case Errc::NoEvidence: return "NoEvidence";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::CycleRejected: return "CycleRejected";
    case Errc::SchemaError: return "SchemaError";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::InvalidRole: return "InvalidRole";
    case Errc::UnknownScenario: return "UnknownScenario";
    }
    return "Unknown";
}

/// Every modeled failure in the library is raised as an Error carrying a code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }
    std::string_view code_name() const noexcept { return errc_name(code_); }

private:
    Errc code_;
};

} // namespace tempocause
