#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace replan {

struct TableStats {
  long long cardinality = 1;
  long long row_size = 1;
};

struct IndexDef {
  std::string table;
  std::string column;
  std::string index_name;
  bool clustered = false;
};

// Cost-model constants. Every constant is overridable through PARAM lines
// in the catalog file so a scenario can shape its own cost landscape.
struct CostParams {
  long long page_size = 4096;
  long long sort_heap_pages = 1000;
  double random_io_penalty = 8.0;
  double cpu_row_cost = 0.001;
  double spill_multiplier = 3.0;
  double noise_sigma = 0.05;
};

struct Catalog {
  std::map<std::string, TableStats> tables;
  std::map<std::pair<std::string, std::string>, long long> columns;  // (table, column) -> distinct
  // Optional per-column value-frequency profile used by range sampling.
  std::map<std::pair<std::string, std::string>, std::vector<double>> profiles;
  std::vector<IndexDef> indexes;
  CostParams params;

  const TableStats& table(const std::string& name) const;
  long long pages(const std::string& table) const;
  double rows_per_page(const std::string& table) const;
  std::vector<const IndexDef*> indexes_on(const std::string& table) const;
  const IndexDef* index(const std::string& name) const;
};

// Line format: TABLE <name> <card> <rowsz> | COLUMN <t>.<c> <distinct> [freq...]
// | INDEX <name> ON <t>(<c>) [CLUSTERED] | PARAM <key> <value>
Catalog parse_catalog(std::string_view text);
std::string serialize_catalog(const Catalog& catalog);

}  // namespace replan
