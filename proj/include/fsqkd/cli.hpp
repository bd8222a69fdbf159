#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fsqkd/config.hpp"

namespace fsqkd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Column order of the tabular output.
const std::vector<std::string>& csv_columns();

/// Runs the `fsqkd` command line. Results go to `out` (or the --out file)
/// only once the whole command has succeeded; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Environment& env = {});

}  // namespace fsqkd
