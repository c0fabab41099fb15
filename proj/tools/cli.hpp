#pragma once

#include <ostream>
#include <span>
#include <string>

namespace invsig::cli {

// Environment variable supplying the default --out directory.
inline constexpr const char* kOutDirEnv = "INVSIG_OUT";

// args excludes the program name. Returns 0 on success, 1 on runtime failure
// and 2 on usage errors; failures print one "error: <kind>: <message>" line to err.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace invsig::cli
