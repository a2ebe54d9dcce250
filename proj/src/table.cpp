#include "rismp/table.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>

namespace rismp {

void ResultTable::check() const {
  for (const std::vector<Cell>& row : rows)
    if (row.size() != columns.size())
      throw ValidationError("table row width does not match header");
}

TableFormat table_format_from_name(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw ValidationError("unknown format '" + name + "' (expected csv|json)");
}

std::string format_cell(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c))
    return std::to_string(std::get<std::int64_t>(c));
  if (std::holds_alternative<double>(c)) {
    const double v = std::get<double>(c);
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }
  return std::get<std::string>(c);
}

std::string table_to_csv(const ResultTable& t) {
  t.check();
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const std::vector<Cell>& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string table_to_json(const ResultTable& t) {
  t.check();
  nlohmann::json j;
  j["columns"] = t.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const std::vector<Cell>& row : t.rows) {
    nlohmann::json jr = nlohmann::json::array();
    for (const Cell& c : row) {
      if (std::holds_alternative<std::int64_t>(c))
        jr.push_back(std::get<std::int64_t>(c));
      else if (std::holds_alternative<double>(c)) {
        const double v = std::get<double>(c);
        if (std::isfinite(v))
          jr.push_back(v);
        else
          jr.push_back(format_cell(c));  // JSON has no inf/nan literals
      } else
        jr.push_back(std::get<std::string>(c));
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

void write_table(const ResultTable& t, const std::string& path, TableFormat f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write output file: " + path);
  out << (f == TableFormat::Csv ? table_to_csv(t) : table_to_json(t));
  if (!out) throw ParseError("failed while writing: " + path);
}

}  // namespace rismp
