#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fewgen {

// Malformed input files (CSV/XML/JSONL). Carries enough context to name the row.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or inconsistent data at run time (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during optimization (CLI exit code 4).
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull);
std::uint64_t splitmix64(std::uint64_t x);

// Stable per-stream seed derivation: independent RNG streams keep disabled
// training phases from shifting the random sequence of enabled ones.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
  return splitmix64(base ^ fnv1a(stream));
}

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Decodes one UTF-8 codepoint starting at s[i]; advances i. Invalid bytes are
// passed through as single-byte codepoints.
char32_t utf8_next(std::string_view s, std::size_t& i);
void utf8_append(std::string& out, char32_t cp);
std::vector<std::string> utf8_chars(std::string_view s);

}  // namespace fewgen
