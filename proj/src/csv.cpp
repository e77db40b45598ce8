#include "nesy/csv.hpp"

#include <fstream>
#include <sstream>

#include "nesy/error.hpp"

namespace nesy {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool any_field = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto flush_field = [&] {
    fields.push_back(cur);
    cur.clear();
    any_field = true;
  };
  auto flush_row = [&] {
    if (any_field || !fields.empty()) {
      flush_field();
      if (table.header.empty())
        table.header = fields;
      else
        table.rows.push_back({row_line, fields});
      fields.clear();
      any_field = false;
    }
    row_line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      any_field = true;
    } else if (c == ',') {
      flush_field();
    } else if (c == '\n') {
      ++line;
      flush_row();
    } else if (c != '\r') {
      cur += c;
      any_field = true;
    }
  }
  if (in_quotes) throw ValidationError("csv: unterminated quoted field");
  if (any_field || !cur.empty() || !fields.empty()) flush_row();
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace nesy
