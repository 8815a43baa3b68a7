#pragma once

#include <ostream>

namespace nmkl {

// Exit codes: 0 all executed checks pass, 1 a check failed, 2 usage or config error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nmkl
