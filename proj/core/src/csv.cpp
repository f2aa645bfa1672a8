#include "citereg/csv.hpp"

namespace citereg::csv {

bool read_record(std::istream& in, Row& out) {
  out.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;

  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        out.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        [[fallthrough]];
      case '\n':
        out.push_back(std::move(field));
        return true;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  out.push_back(std::move(field));
  return true;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

void write_record(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out << ',';
    out << quote(row[i]);
  }
  out << "\r\n";
}

}  // namespace citereg::csv
