#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace nhits {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Splitmix64 mix of (seed, stream) for independent, reproducible sub-streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a 64-bit digest, hex encoded. Used for config and input-file fingerprints.
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// Current UTC time as ISO-8601 ("2026-01-01T00:00:00Z").
std::string utc_timestamp();

} // namespace nhits

namespace nhits {

/// Thread cap from NHITS_THREADS (unset or 0 = hardware concurrency). Always >= 1.
std::size_t thread_count_from_env();

} // namespace nhits
