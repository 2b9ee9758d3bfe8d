#pragma once

namespace mtat {

/// Command-line entry point.  Subcommands: forward, reconstruct, roundtrip,
/// check-kernel, check-speed, phantom, energy-report, contraction.
/// Returns 0 on success, 1 on stage or check failure, 2 on usage errors.
int cli_dispatch(int argc, const char* const* argv);

} // namespace mtat
