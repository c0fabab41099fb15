#include "invsig/error.hpp"

namespace invsig {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::InvalidCurve: return "invalid-curve";
        case ErrorCode::DegenerateCurve: return "degenerate-curve";
        case ErrorCode::ShapeMismatch: return "shape-mismatch";
        case ErrorCode::NonFinite: return "non-finite";
        case ErrorCode::MalformedFile: return "malformed-file";
        case ErrorCode::VersionMismatch: return "version-mismatch";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace invsig
