#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invsig {

enum class ErrorCode {
    InvalidArgument,
    InvalidCurve,
    DegenerateCurve,
    ShapeMismatch,
    NonFinite,
    MalformedFile,
    VersionMismatch,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Library-wide exception. what() is a single line so the CLI can forward it verbatim.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace invsig
