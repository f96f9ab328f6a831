#pragma once

#include <stdexcept>
#include <string>

namespace vigil {

enum class ErrorCode {
    MalformedRow,
    RangeViolation,
    NonMonotoneTimestamp,
    ProbeUnavailable,
    InsufficientData,
    ShapeMismatch,
    WrongWindowLength,
    OutOfOrderSample,
    UnknownVersion,
    CorruptBundle,
    EmptyInput,
    InvalidSpec,
    IoError,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace vigil
