#pragma once

#include <iosfwd>

namespace pkboin {

/// Entry point of the `pkboin` command line tool. Returns the process exit
/// code: 0 on success, 1 on invalid usage or input, 2 on runtime failure.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pkboin
