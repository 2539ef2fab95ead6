#pragma once

namespace amm::cli {

// exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure,
// 1 internal error
int run(int argc, const char* const* argv);

} // namespace amm::cli
