#pragma once

#include <iosfwd>

namespace sphdir {

// Runs one `sphdir` subcommand. Returns 0 on success, 1 on usage or input errors,
// 2 on numerical failures.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sphdir
