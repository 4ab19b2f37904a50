#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latent {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Parses and runs one subcommand. Results go to `out` unless --output names a
// file; diagnostics go to `err` as "latent: error[<code>]: <message>".
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Applies LATENT_NUM_THREADS, if set, to the OpenMP runtime.
void ApplyThreadOverride();

}  // namespace latent
