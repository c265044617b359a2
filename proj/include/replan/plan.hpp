#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "replan/error.hpp"

namespace replan {

struct Catalog;

enum class PopType { NLJoin, HSJoin, MSJoin, TbScan, IxScan, Fetch, Sort, Return };

constexpr PopType kAllPopTypes[] = {PopType::NLJoin, PopType::HSJoin, PopType::MSJoin,
                                    PopType::TbScan, PopType::IxScan, PopType::Fetch,
                                    PopType::Sort,   PopType::Return};

std::string_view to_string(PopType type);
std::optional<PopType> pop_type_from_string(std::string_view name);

inline bool is_join(PopType t) {
  return t == PopType::NLJoin || t == PopType::HSJoin || t == PopType::MSJoin;
}
inline bool is_scan(PopType t) { return t == PopType::TbScan || t == PopType::IxScan; }

// 0 for scans, 1 for FETCH/SORT/RETURN, 2 for joins.
int pop_arity(PopType t);

struct TableRef {
  std::string table_name;
  std::string instance;
  bool operator==(const TableRef&) const = default;
};

// One plan operator. Join inputs are ordered: position 0 is the outer
// stream, position 1 the inner stream.
struct Lolepop {
  int id = 0;
  PopType pop_type = PopType::Return;
  double est_cardinality = 0.0;
  long long est_row_size = 0;
  double est_cost = 0.0;
  std::optional<TableRef> table_ref;    // present iff TBSCAN/IXSCAN
  std::optional<std::string> index_name;  // present iff IXSCAN
  std::vector<int> inputs;

  bool operator==(const Lolepop&) const = default;
};

// Rooted operator tree. The root is the unique RETURN; every other pop is
// consumed by exactly one parent.
struct Plan {
  int root = 0;
  std::map<int, Lolepop> pops;
  std::string query_id;  // provenance only, not part of structural equality

  const Lolepop& pop(int id) const;
  Lolepop& pop(int id);
  bool has_pop(int id) const { return pops.count(id) != 0; }

  // Pre-order ids from the root, outer input before inner.
  std::vector<int> preorder() const;
  int depth_of(int id) const;
  int join_count() const;

  friend bool operator==(const Plan& a, const Plan& b) {
    return a.root == b.root && a.pops == b.pops;
  }
};

// Throws Error with the offending kind. When a catalog is given, scan
// cardinalities are also checked against table cardinalities.
void validate_plan(const Plan& plan, const Catalog* catalog = nullptr);

// Plan text format: one stanza per pop, blank-line separated, the RETURN
// stanza first. Lines: POP / CARD / ROWSZ / COST / TABLE / INDEX / INPUTS.
Plan parse_plan(std::string_view text);
std::string serialize_plan(const Plan& plan);

// A connected segment of the plan: a set of adjacent joins plus the
// unary/scan chains hanging off them. Inputs that lead to a join outside
// the segment are cut.
struct SubPlan {
  int root_id = 0;
  std::vector<int> pop_ids;   // sorted ascending
  std::vector<int> join_ids;  // sorted ascending

  bool operator==(const SubPlan&) const = default;
};

// All segments with 1..max_joins joins, ordered bottom-up (deepest segment
// root first) so iteration climbs toward the RETURN.
std::vector<SubPlan> enumerate_subplans(const Plan& plan, int max_joins);

// Pre-order structural signature ignoring numeric annotations. With
// canonical_names, table/instance/index names are replaced by first-visit
// symbols, making the signature invariant under bijective renamings.
std::string structure_signature(const Plan& plan, bool canonical_names = false);

}  // namespace replan
