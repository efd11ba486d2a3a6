#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vulnscape::csv {

using Row = std::vector<std::string>;

/// A parsed CSV document: header plus data rows.  `line_of[i]` is the
/// 1-based physical line where data row i starts (the header is line 1).
struct Table {
    Row header;
    std::vector<Row> rows;
    std::vector<std::size_t> line_of;

    /// Index of a header column, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
    /// Index of a header column; throws MissingColumn.
    std::size_t require(std::string_view name) const;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// A trailing blank line is ignored; a leading UTF-8 BOM is stripped.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);
std::string to_string(const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);
/// Strict decimal parse: the whole field must be consumed.
std::optional<double> parse_number(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace vulnscape::csv
