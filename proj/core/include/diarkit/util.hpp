#pragma once

#include <cstdarg>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace diarkit {

/// printf-style formatting into a std::string.
std::string strprintf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

/// Split on any run of whitespace; no empty tokens.
std::vector<std::string> split_ws(std::string_view line);

/// Split on a single delimiter; keeps empty tokens.
std::vector<std::string> split_char(std::string_view line, char delim);

std::string_view trim(std::string_view s);

/// Strict double parse of a whole token; returns false on trailing junk.
bool parse_double(std::string_view token, double* out);
bool parse_long(std::string_view token, long* out);

/// FNV-1a 64-bit, used to checksum model file payloads.
std::uint64_t fnv1a64(std::string_view data);

/// Emit a warning line on stderr ("diarkit: warning: ...").
void warn(const std::string& msg);

/// Read a whole file into a string; throws IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace diarkit
