#include "replan/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

const TableStats& Catalog::table(const std::string& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw Error(ErrorKind::UnknownTable, "unknown table: " + name);
  return it->second;
}

long long Catalog::pages(const std::string& table_name) const {
  const TableStats& t = table(table_name);
  return std::max<long long>(1, (t.cardinality * t.row_size + params.page_size - 1) / params.page_size);
}

double Catalog::rows_per_page(const std::string& table_name) const {
  const TableStats& t = table(table_name);
  return std::max(1.0, static_cast<double>(params.page_size) / static_cast<double>(std::max<long long>(1, t.row_size)));
}

std::vector<const IndexDef*> Catalog::indexes_on(const std::string& table_name) const {
  std::vector<const IndexDef*> out;
  for (const auto& idx : indexes)
    if (idx.table == table_name) out.push_back(&idx);
  return out;
}

const IndexDef* Catalog::index(const std::string& name) const {
  for (const auto& idx : indexes)
    if (idx.index_name == name) return &idx;
  return nullptr;
}

namespace {

[[noreturn]] void fail(size_t line, const std::string& msg) {
  throw Error(ErrorKind::Syntax, msg, static_cast<int>(line + 1), 1);
}

// "table.column" -> pair
std::pair<std::string, std::string> parse_dotted(size_t line, const std::string& token) {
  auto dot = token.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == token.size())
    fail(line, "expected <name>.<column>, got: " + token);
  return {token.substr(0, dot), token.substr(dot + 1)};
}

}  // namespace

Catalog parse_catalog(std::string_view text) {
  Catalog catalog;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    auto tokens = split_ws(lines[i]);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string& key = tokens[0];
    if (key == "TABLE") {
      if (tokens.size() != 4) fail(i, "expected: TABLE <name> <card> <rowsz>");
      auto card = parse_number(tokens[2]);
      auto rowsz = parse_number(tokens[3]);
      if (!card || *card < 1 || !rowsz || *rowsz < 1) fail(i, "TABLE needs cardinality and row size >= 1");
      catalog.tables[tokens[1]] = TableStats{static_cast<long long>(*card), static_cast<long long>(*rowsz)};
    } else if (key == "COLUMN") {
      if (tokens.size() < 3) fail(i, "expected: COLUMN <table>.<col> <distinct> [freq...]");
      auto col = parse_dotted(i, tokens[1]);
      auto distinct = parse_number(tokens[2]);
      if (!distinct || *distinct < 1) fail(i, "COLUMN distinct count must be >= 1");
      catalog.columns[col] = static_cast<long long>(*distinct);
      if (tokens.size() > 3) {
        std::vector<double> freqs;
        for (size_t k = 3; k < tokens.size(); ++k) {
          auto f = parse_number(tokens[k]);
          if (!f || *f < 1) fail(i, "profile frequencies must be >= 1");
          freqs.push_back(*f);
        }
        catalog.profiles[col] = std::move(freqs);
      }
    } else if (key == "INDEX") {
      // INDEX <name> ON <table>(<col>) [CLUSTERED]
      if (tokens.size() < 4 || tokens[2] != "ON") fail(i, "expected: INDEX <name> ON <table>(<col>) [CLUSTERED]");
      const std::string& target = tokens[3];
      auto open = target.find('(');
      auto close = target.find(')');
      if (open == std::string::npos || close == std::string::npos || close < open)
        fail(i, "expected <table>(<col>) in INDEX line");
      IndexDef idx;
      idx.index_name = tokens[1];
      idx.table = target.substr(0, open);
      idx.column = target.substr(open + 1, close - open - 1);
      if (idx.table.empty() || idx.column.empty()) fail(i, "empty table or column in INDEX line");
      if (tokens.size() == 5) {
        if (tokens[4] != "CLUSTERED") fail(i, "unknown index qualifier: " + tokens[4]);
        idx.clustered = true;
      } else if (tokens.size() > 5) {
        fail(i, "trailing tokens in INDEX line");
      }
      catalog.indexes.push_back(std::move(idx));
    } else if (key == "PARAM") {
      if (tokens.size() != 3) fail(i, "expected: PARAM <key> <value>");
      auto v = parse_number(tokens[2]);
      if (!v) fail(i, "PARAM value must be numeric");
      const std::string& name = tokens[1];
      if (name == "page_size") catalog.params.page_size = static_cast<long long>(*v);
      else if (name == "sort_heap_pages") catalog.params.sort_heap_pages = static_cast<long long>(*v);
      else if (name == "random_io_penalty") catalog.params.random_io_penalty = *v;
      else if (name == "cpu_row_cost") catalog.params.cpu_row_cost = *v;
      else if (name == "spill_multiplier") catalog.params.spill_multiplier = *v;
      else if (name == "noise_sigma") catalog.params.noise_sigma = *v;
      else fail(i, "unknown PARAM key: " + name);
    } else {
      fail(i, "unknown catalog line: " + key);
    }
  }

  // Consistency: index columns and profile columns must exist.
  for (const auto& idx : catalog.indexes) {
    if (!catalog.tables.count(idx.table))
      throw Error(ErrorKind::UnknownTable, "index " + idx.index_name + " references unknown table " + idx.table);
    if (!catalog.columns.count({idx.table, idx.column}))
      throw Error(ErrorKind::Structure, "index " + idx.index_name + " references undeclared column " +
                                            idx.table + "." + idx.column);
  }
  for (const auto& [col, distinct] : catalog.columns) {
    auto it = catalog.tables.find(col.first);
    if (it == catalog.tables.end())
      throw Error(ErrorKind::UnknownTable, "column on unknown table: " + col.first + "." + col.second);
    if (distinct > it->second.cardinality)
      throw Error(ErrorKind::Structure, "distinct count exceeds table cardinality: " + col.first + "." + col.second);
  }
  return catalog;
}

std::string serialize_catalog(const Catalog& catalog) {
  std::ostringstream out;
  for (const auto& [name, stats] : catalog.tables)
    out << "TABLE " << name << " " << stats.cardinality << " " << stats.row_size << "\n";
  for (const auto& [col, distinct] : catalog.columns) {
    out << "COLUMN " << col.first << "." << col.second << " " << distinct;
    auto p = catalog.profiles.find(col);
    if (p != catalog.profiles.end())
      for (double f : p->second) out << " " << format_number(f);
    out << "\n";
  }
  for (const auto& idx : catalog.indexes) {
    out << "INDEX " << idx.index_name << " ON " << idx.table << "(" << idx.column << ")";
    if (idx.clustered) out << " CLUSTERED";
    out << "\n";
  }
  const CostParams defaults;
  const CostParams& p = catalog.params;
  if (p.page_size != defaults.page_size) out << "PARAM page_size " << p.page_size << "\n";
  if (p.sort_heap_pages != defaults.sort_heap_pages) out << "PARAM sort_heap_pages " << p.sort_heap_pages << "\n";
  if (p.random_io_penalty != defaults.random_io_penalty)
    out << "PARAM random_io_penalty " << format_number(p.random_io_penalty) << "\n";
  if (p.cpu_row_cost != defaults.cpu_row_cost) out << "PARAM cpu_row_cost " << format_number(p.cpu_row_cost) << "\n";
  if (p.spill_multiplier != defaults.spill_multiplier)
    out << "PARAM spill_multiplier " << format_number(p.spill_multiplier) << "\n";
  if (p.noise_sigma != defaults.noise_sigma) out << "PARAM noise_sigma " << format_number(p.noise_sigma) << "\n";
  return out.str();
}

}  // namespace replan
