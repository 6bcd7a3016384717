#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpmwg::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Process exit codes. Domain errors map to kExitDomainBase + their code.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitDomainBase = 10;

// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpmwg::cli
