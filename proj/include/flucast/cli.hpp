#pragma once

#include <iosfwd>

namespace flucast {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Subcommands synth, backtest, evaluate, nowcast. Returns 0 on success, 1 on
/// bad usage or invalid input, 2 on a runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace flucast
