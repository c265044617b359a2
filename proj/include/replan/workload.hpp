#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replan/catalog.hpp"
#include "replan/plan.hpp"

namespace replan {

struct ColumnRef {
  std::string instance;
  std::string column;
  bool operator==(const ColumnRef&) const = default;
  auto operator<=>(const ColumnRef&) const = default;
};

struct JoinPred {
  ColumnRef left;
  ColumnRef right;
  double est_selectivity = 1.0;
  double true_selectivity = 1.0;
  bool operator==(const JoinPred&) const = default;
};

struct LocalPred {
  ColumnRef column;
  std::string op;     // one of = != < <= > >= IS
  std::string value;  // opaque literal, kept for round trips
  double est_selectivity = 1.0;
  double true_selectivity = 1.0;
  bool operator==(const LocalPred&) const = default;
};

// Conjunctive query: table references, equi-join predicates, local predicates.
// Estimated and true selectivities are both data; their divergence is what
// the learning engine exploits.
struct Query {
  std::string id;
  std::vector<TableRef> tables;
  std::vector<JoinPred> join_preds;
  std::vector<LocalPred> local_preds;

  const TableRef& table_by_instance(const std::string& instance) const;
  bool has_instance(const std::string& instance) const;
  // Instances adjacent through join predicates.
  bool join_graph_connected() const;

  bool operator==(const Query&) const = default;
};

struct Workload {
  std::vector<Query> queries;
};

Workload parse_workload(std::string_view text);
std::string serialize_workload(const Workload& workload);

void validate_query(const Query& query, const Catalog& catalog);

// Variants of `query` where local predicate `pred_index` takes selectivities
// drawn from the column's value-frequency profile (k log-spaced points; the
// est/true ratio of the original predicate is preserved). k == 1 returns the
// original query unchanged.
std::vector<Query> sample_ranges(const Query& query, const Catalog& catalog, int pred_index,
                                 int k = 5);

}  // namespace replan
