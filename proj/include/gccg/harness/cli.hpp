#pragma once

#include <ostream>

namespace gccg::harness {

/// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
/// 3 internal invariant violation.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gccg::harness
