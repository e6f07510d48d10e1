#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsmplan::detail {

std::string read_file(const std::string& path);

// LF or CRLF; a trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

// Comma split with surrounding blanks trimmed; no quoting.
std::vector<std::string> split_csv_row(std::string_view line);

// Non-negative decimal integer; nullopt on anything else.
std::optional<std::uint64_t> parse_count(std::string_view cell);

}  // namespace dsmplan::detail
