#pragma once

namespace symreg::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 numeric non-convergence, 2 usage or data error.
int run(int argc, const char* const* argv);

}  // namespace symreg::cli
