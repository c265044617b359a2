#include "replan/scenario.hpp"

#include <sstream>

#include "replan/error.hpp"

namespace replan {

namespace {

void add_table(Catalog& c, const std::string& name, long long card, long long rowsz) {
  c.tables[name] = TableStats{card, rowsz};
}

void add_column(Catalog& c, const std::string& table, const std::string& column, long long distinct) {
  c.columns[{table, column}] = distinct;
}

void add_index(Catalog& c, const std::string& name, const std::string& table,
               const std::string& column, bool clustered) {
  c.indexes.push_back(IndexDef{table, column, name, clustered});
}

JoinPred join(const std::string& li, const std::string& lc, const std::string& ri,
              const std::string& rc, double est, double tru) {
  return JoinPred{{li, lc}, {ri, rc}, est, tru};
}

LocalPred pred(const std::string& inst, const std::string& col, const std::string& op,
               const std::string& value, double est, double tru) {
  return LocalPred{{inst, col}, op, value, est, tru};
}

CostParams motif_params() {
  CostParams p;
  p.cpu_row_cost = 0.001;
  p.sort_heap_pages = 500;
  p.noise_sigma = 0.01;
  return p;
}

}  // namespace

Scenario sort_spill_scenario() {
  Scenario s;
  s.name = "sort_spill";
  s.catalog.params = motif_params();
  add_table(s.catalog, "open_in", 50000, 80);
  add_table(s.catalog, "entry_idx", 2000000, 120);
  add_column(s.catalog, "open_in", "key", 50000);
  add_column(s.catalog, "entry_idx", "key", 50000);
  add_column(s.catalog, "entry_idx", "flag", 4);
  add_index(s.catalog, "oi_key_idx", "open_in", "key", true);
  add_index(s.catalog, "ei_flag_idx", "entry_idx", "flag", false);

  Query q;
  q.id = "SPILL1";
  q.tables = {{"open_in", "Q1"}, {"entry_idx", "Q2"}};
  q.join_preds = {join("Q1", "key", "Q2", "key", 0.00002, 0.00002)};
  q.local_preds = {pred("Q2", "flag", "=", "A", 0.0166667, 0.5)};
  s.workload.queries.push_back(std::move(q));
  return s;
}

Scenario index_flood_scenario() {
  Scenario s;
  s.name = "index_flood";
  s.catalog.params = motif_params();
  add_table(s.catalog, "catalog_sales", 1441548, 100);
  add_table(s.catalog, "date_dim", 73049, 100);
  add_column(s.catalog, "catalog_sales", "item_key", 102000);
  add_column(s.catalog, "catalog_sales", "qty", 100);
  add_column(s.catalog, "date_dim", "d_key", 73049);
  add_column(s.catalog, "date_dim", "d_month", 500);
  add_index(s.catalog, "cs_item_idx", "catalog_sales", "item_key", false);
  add_index(s.catalog, "dd_month_idx", "date_dim", "d_month", true);

  Query q;
  q.id = "FLOOD1";
  q.tables = {{"date_dim", "Q3"}, {"catalog_sales", "Q4"}};
  q.join_preds = {join("Q3", "d_key", "Q4", "item_key", 0.000001, 0.00005)};
  q.local_preds = {pred("Q3", "d_month", "=", "5", 0.002, 0.002),
                   pred("Q4", "qty", ">", "0", 0.9, 0.9)};
  s.workload.queries.push_back(std::move(q));
  return s;
}

Scenario scan_inversion_scenario() {
  Scenario s;
  s.name = "scan_inversion";
  s.catalog.params = motif_params();
  add_table(s.catalog, "customer_demo", 500000, 80);
  add_table(s.catalog, "store_sales2", 400000, 100);
  add_column(s.catalog, "customer_demo", "cd_key", 500000);
  add_column(s.catalog, "customer_demo", "cd_flag", 10);
  add_column(s.catalog, "store_sales2", "sold_cd", 400000);
  add_column(s.catalog, "store_sales2", "ss_flag", 10);
  add_index(s.catalog, "cd_flag_idx", "customer_demo", "cd_flag", false);
  add_index(s.catalog, "ss_flag_idx", "store_sales2", "ss_flag", false);

  Query q;
  q.id = "INVERT1";
  q.tables = {{"customer_demo", "Q1"}, {"store_sales2", "Q2"}};
  q.join_preds = {join("Q1", "cd_key", "Q2", "sold_cd", 0.000002, 0.000002)};
  q.local_preds = {pred("Q1", "cd_flag", "=", "1", 0.002, 0.6),
                   pred("Q2", "ss_flag", "=", "3", 0.002, 0.6)};
  s.workload.queries.push_back(std::move(q));
  return s;
}

Scenario stale_range_scenario() {
  Scenario s;
  s.name = "stale_range";
  s.catalog.params = motif_params();
  s.catalog.params.cpu_row_cost = 0.02;
  s.catalog.params.sort_heap_pages = 10000;
  add_table(s.catalog, "store_sales", 288040, 100);
  add_table(s.catalog, "date_dim2", 146098, 200);
  add_column(s.catalog, "store_sales", "sold_date", 1827);
  add_column(s.catalog, "date_dim2", "d_date", 1827);
  add_index(s.catalog, "ss_date_idx", "store_sales", "sold_date", true);
  add_index(s.catalog, "dd_date_idx", "date_dim2", "d_date", false);

  Query q;
  q.id = "STALE1";
  q.tables = {{"store_sales", "Q1"}, {"date_dim2", "Q2"}};
  q.join_preds = {join("Q1", "sold_date", "Q2", "d_date", 0.0000068, 0.0000068)};
  q.local_preds = {pred("Q2", "d_date", "<=", "2000-01-01", 0.5, 0.00137)};
  s.workload.queries.push_back(std::move(q));
  return s;
}

std::vector<Scenario> motif_scenarios() {
  return {sort_spill_scenario(), index_flood_scenario(), scan_inversion_scenario(),
          stale_range_scenario()};
}

namespace {

// Appends a suffixed copy of `src` into `dst`, renaming every name.
void append_renamed(Scenario& dst, const Scenario& src, const std::string& suffix) {
  for (const auto& [name, stats] : src.catalog.tables) dst.catalog.tables[name + suffix] = stats;
  for (const auto& [col, distinct] : src.catalog.columns)
    dst.catalog.columns[{col.first + suffix, col.second + suffix}] = distinct;
  for (const auto& [col, freqs] : src.catalog.profiles)
    dst.catalog.profiles[{col.first + suffix, col.second + suffix}] = freqs;
  for (const auto& idx : src.catalog.indexes)
    dst.catalog.indexes.push_back(
        IndexDef{idx.table + suffix, idx.column + suffix, idx.index_name + suffix, idx.clustered});
  for (const auto& query : src.workload.queries) {
    Query q = query;
    q.id = query.id + suffix;
    for (auto& ref : q.tables) {
      ref.table_name += suffix;
      ref.instance += suffix;
    }
    for (auto& join : q.join_preds) {
      join.left.instance += suffix;
      join.left.column += suffix;
      join.right.instance += suffix;
      join.right.column += suffix;
    }
    for (auto& pred : q.local_preds) {
      pred.column.instance += suffix;
      pred.column.column += suffix;
    }
    dst.workload.queries.push_back(std::move(q));
  }
}

}  // namespace

Scenario combined_scenario() {
  Scenario s;
  s.name = "combined";
  s.catalog.params = motif_params();
  append_renamed(s, sort_spill_scenario(), "");
  append_renamed(s, index_flood_scenario(), "");
  append_renamed(s, scan_inversion_scenario(), "");
  return s;
}

Scenario scaled_scenario(int n_queries) {
  if (n_queries < 1) throw Error(ErrorKind::Range, "scaled scenario needs at least one query");
  Scenario s;
  s.name = "scaled_" + std::to_string(n_queries);
  s.catalog.params = motif_params();
  std::vector<Scenario> motifs = {sort_spill_scenario(), index_flood_scenario(),
                                  scan_inversion_scenario()};
  for (int i = 0; i < n_queries; ++i) {
    const Scenario& motif = motifs[static_cast<size_t>(i) % motifs.size()];
    append_renamed(s, motif, "_w" + std::to_string(i));
  }
  return s;
}

Scenario renamed_clone(const Scenario& base, const std::string& suffix) {
  Scenario s;
  s.name = base.name + suffix;
  s.catalog.params = base.catalog.params;
  append_renamed(s, base, suffix);
  return s;
}

Scenario chain_scenario(int tables) {
  if (tables < 1) throw Error(ErrorKind::Range, "chain scenario needs at least one table");
  Scenario s;
  s.name = "chain_" + std::to_string(tables);
  s.catalog.params = motif_params();
  Query q;
  q.id = "CHAIN" + std::to_string(tables);
  for (int i = 0; i < tables; ++i) {
    std::string table = "chain_t" + std::to_string(i);
    std::string instance = "Q" + std::to_string(i + 1);
    add_table(s.catalog, table, 10000 + 1000 * (i % 5), 100);
    add_column(s.catalog, table, "k", 1000);
    add_column(s.catalog, table, "f", 10);
    add_index(s.catalog, "idx_" + table, table, "k", true);
    q.tables.push_back(TableRef{table, instance});
    if (i > 0)
      q.join_preds.push_back(join("Q" + std::to_string(i), "k", instance, "k", 0.001, 0.002));
    if (i % 3 == 0) q.local_preds.push_back(pred(instance, "f", "=", "1", 0.1, 0.2));
  }
  s.workload.queries.push_back(std::move(q));
  return s;
}

}  // namespace replan
