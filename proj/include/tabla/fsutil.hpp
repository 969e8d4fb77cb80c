#pragma once

#include <filesystem>
#include <string>

namespace tabla {

// Write via temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// printf-style convenience returning std::string
std::string strprintf(const char* fmt, ...);

// Shortest decimal form that parses back to the same double, with at
// least full precision when needed (%.17g).
std::string format_double(double v);

}  // namespace tabla
