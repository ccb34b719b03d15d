#pragma once

#include <iosfwd>

namespace olab {

// Exit codes: 0 success or bounded verdict, 1 violated verdict, 2 usage, config or I/O error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace olab
