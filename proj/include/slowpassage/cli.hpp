#pragma once

#include <iosfwd>

namespace sp {

// Subcommands: passage, charts, spectral, manifolds, resolvent, pi1, pi2, pi3.
// Returns 0 when every check passes, 1 on a failed check or run error, 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sp
