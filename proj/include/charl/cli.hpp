#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace charl::cli {

enum Exit : int { ok = 0, usage_error = 1, data_error = 2 };

/// Runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `contents` next to `path` and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace charl::cli
