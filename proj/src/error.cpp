#include "flashfx/error.hpp"

namespace flashfx {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::UnsortedInput: return "UnsortedInput";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::TooManyRejects: return "TooManyRejects";
        case ErrorCode::StaleQuote: return "StaleQuote";
        case ErrorCode::NoHistory: return "NoHistory";
        case ErrorCode::InsufficientQuoteHistory: return "InsufficientQuoteHistory";
        case ErrorCode::MissingSide: return "MissingSide";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::Separation: return "Separation";
        case ErrorCode::Singular: return "Singular";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::EmptyBook: return "EmptyBook";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

InputError::InputError(ErrorCode code, std::string path, std::uint64_t line,
                       const std::string& detail)
    : Error(code, path + ":" + std::to_string(line) + ": " + std::string(to_string(code)) +
                      ": " + detail),
      path_(std::move(path)),
      line_(line) {}

}  // namespace flashfx
