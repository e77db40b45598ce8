#pragma once

#include <string>
#include <vector>

namespace nesy {

// Minimal RFC-4180-style CSV reader: quoted fields, "" escapes, CR/LF
// tolerant. Rows keep their 1-based line number for error reporting.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);

}  // namespace nesy
