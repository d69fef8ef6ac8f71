#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace revlens {

enum class ErrorCode {
    invalid_argument,
    not_found,
    validation,
    conflict,
    too_large,
    empty_document,
    configuration,
};

const char* to_string(ErrorCode code);

// Base exception for every recoverable failure surfaced by the library.
// The service layer maps the code onto an HTTP status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Optimistic-concurrency failure; carries the version the client must re-sync to.
class ConflictError : public Error {
public:
    ConflictError(std::uint64_t current_version, const std::string& message)
        : Error(ErrorCode::conflict, message), current_version_(current_version) {}

    std::uint64_t current_version() const { return current_version_; }

private:
    std::uint64_t current_version_;
};

} // namespace revlens
