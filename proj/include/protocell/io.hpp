#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace protocell {

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double v);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Minimal CSV: comma separated, no quoting (fields never contain commas).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    static CsvTable parse(std::string_view text);
    /// Column index by name; throws Error when absent.
    std::size_t column(std::string_view name) const;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace protocell
