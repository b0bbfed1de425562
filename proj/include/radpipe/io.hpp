#pragma once

#include <string>
#include <vector>

namespace radpipe {

/// Whole file as bytes. Throws ConfigError when missing/unreadable.
std::string read_file(const std::string& path);

void write_file(const std::string& path, const std::string& content);

/// Non-empty lines of a file, '\n'-separated, trailing '\r' stripped.
std::vector<std::string> read_lines(const std::string& path);

bool file_exists(const std::string& path);

}  // namespace radpipe
