#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flashfx {

enum class ErrorCode {
    MalformedRecord,
    DomainError,
    UnsortedInput,
    IoError,
    TooManyRejects,
    StaleQuote,
    NoHistory,
    InsufficientQuoteHistory,
    MissingSide,
    EmptyWindow,
    EmptyInput,
    Separation,
    Singular,
    NotConverged,
    InvalidSpec,
    EmptyBook,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Input-file failures keep the file and the offending line number.
class InputError : public Error {
public:
    InputError(ErrorCode code, std::string path, std::uint64_t line, const std::string& detail);

    const std::string& path() const noexcept { return path_; }
    std::uint64_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::uint64_t line_;
};

}  // namespace flashfx
