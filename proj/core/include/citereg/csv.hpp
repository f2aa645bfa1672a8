#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace citereg::csv {

using Row = std::vector<std::string>;

/// Reads RFC 4180 records: comma separated, optional double-quoted fields with
/// "" as an escaped quote, CRLF or LF line endings. Quoted fields may span
/// lines. Returns false at end of input.
bool read_record(std::istream& in, Row& out);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string quote(const std::string& field);

void write_record(std::ostream& out, const Row& row);

}  // namespace citereg::csv
