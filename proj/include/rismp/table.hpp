// Small typed result table with deterministic CSV/JSON emission. Doubles are
// printed with the shortest round-trip representation so the same table
// yields byte-identical files across runs.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rismp/errors.hpp"

namespace rismp {

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void check() const;  // every row matches the header width
};

enum class TableFormat { Csv, Json };
TableFormat table_format_from_name(const std::string& name);

std::string format_cell(const Cell& c);
std::string table_to_csv(const ResultTable& t);
std::string table_to_json(const ResultTable& t);
void write_table(const ResultTable& t, const std::string& path, TableFormat f);

}  // namespace rismp
