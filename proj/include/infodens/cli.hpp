#pragma once

#include <iosfwd>

namespace infodens::cli {

// Entry point of the `infodens` binary. Data goes to out, logs and the
// single-line JSON error record to err. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace infodens::cli
