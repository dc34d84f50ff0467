#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace polyacp::io {

// Tab if the header line contains one, comma otherwise.
char detect_delimiter(std::string_view header);

std::vector<std::string> split(std::string_view line, char delimiter);

std::string_view trim(std::string_view s);

// Reads one line, stripping a trailing '\r'. Returns false at end of input.
bool read_line(std::istream& in, std::string& line);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

// Bit pattern of a double as 16 lowercase hex digits, and back.
std::string hex_encode(const double* data, std::size_t count);
std::vector<double> hex_decode(std::string_view hex);

}  // namespace polyacp::io
