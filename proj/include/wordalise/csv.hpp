#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wordalise::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF, optional UTF-8 BOM.
// Blank lines are skipped. Throws Error(MalformedRow) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::string escape_field(std::string_view field);
std::string format_row(const Row& row);

std::string read_file(const std::string& path);

}  // namespace wordalise::csv
