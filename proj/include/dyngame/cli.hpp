#pragma once

namespace dyngame {

// Entry point of the dyngame command-line tool. Returns 0 on success, 1 on a
// domain error and 2 on a usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace dyngame
