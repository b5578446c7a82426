#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"

namespace stationcast::csv {

// Minimal RFC-ish CSV support: comma separated, double quotes escape fields
// containing commas/quotes, embedded "" unescapes to ".

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // column index by name, -1 when absent
  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw EmptyFileError(path + " is empty");
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

}  // namespace stationcast::csv
