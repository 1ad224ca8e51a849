#pragma once

#include <iosfwd>

namespace wsketch::cli {

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 on success, nonzero after printing a one-line diagnostic to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wsketch::cli
