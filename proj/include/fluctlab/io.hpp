#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fluctlab {

// Shortest representation that parses back to the same double.
std::string format_double(double value);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fluctlab
