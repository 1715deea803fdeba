#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nhits::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Entry point for `nhits <train|evaluate|tune|decompose|report> ...`. Never throws; failures are
/// reported as one diagnostic line on `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "1/24" or "0.5" -> double in (0, 1]. Throws ConfigError.
double parse_ratio(const std::string& text);
/// Comma-separated list helpers. Throw ConfigError.
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<double> parse_ratio_list(const std::string& text);

} // namespace nhits::cli
