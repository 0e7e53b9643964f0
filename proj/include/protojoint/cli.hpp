#pragma once

namespace protojoint {

inline constexpr const char* kVersion = "protojoint 0.1.0";

// Routes argv to a subcommand. Exit codes: 0 success, 1 validation or
// usage error, 2 runtime failure.
int dispatch(int argc, const char* const* argv);

}  // namespace protojoint
