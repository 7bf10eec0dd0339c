#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arith {

/// Shortest form that still round-trips: printf "%.17g".
std::string format_double(double x);

std::string join_csv(std::span<const std::string> cells);

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never sees a truncated file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Accumulates CSV text with `,` separators and `\n` line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& row(std::vector<std::string> cells);
    [[nodiscard]] const std::string& text() const { return text_; }
    void save(const std::filesystem::path& path) const { write_file_atomic(path, text_); }

private:
    std::size_t columns_;
    std::string text_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace arith
