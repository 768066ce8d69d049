#pragma once

#include <iosfwd>

namespace tgdr::cli {

// Entry point of the `tgdr` command. Writes human-readable output to `out`
// and a single "error: CODE: message" line to `err` on failure. Returns the
// process exit status.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tgdr::cli
