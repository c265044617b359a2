#include "replan/plan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "replan/catalog.hpp"
#include "replan/util.hpp"

namespace replan {

std::string_view to_string(PopType type) {
  switch (type) {
    case PopType::NLJoin: return "NLJOIN";
    case PopType::HSJoin: return "HSJOIN";
    case PopType::MSJoin: return "MSJOIN";
    case PopType::TbScan: return "TBSCAN";
    case PopType::IxScan: return "IXSCAN";
    case PopType::Fetch: return "FETCH";
    case PopType::Sort: return "SORT";
    case PopType::Return: return "RETURN";
  }
  return "?";
}

std::optional<PopType> pop_type_from_string(std::string_view name) {
  for (PopType t : kAllPopTypes)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

int pop_arity(PopType t) {
  if (is_scan(t)) return 0;
  if (is_join(t)) return 2;
  return 1;
}

const Lolepop& Plan::pop(int id) const {
  auto it = pops.find(id);
  if (it == pops.end()) throw Error(ErrorKind::Internal, "no pop with id " + std::to_string(id));
  return it->second;
}

Lolepop& Plan::pop(int id) {
  auto it = pops.find(id);
  if (it == pops.end()) throw Error(ErrorKind::Internal, "no pop with id " + std::to_string(id));
  return it->second;
}

std::vector<int> Plan::preorder() const {
  std::vector<int> order;
  order.reserve(pops.size());
  std::function<void(int)> walk = [&](int id) {
    order.push_back(id);
    for (int child : pop(id).inputs) walk(child);
  };
  walk(root);
  return order;
}

int Plan::depth_of(int id) const {
  std::function<int(int, int)> walk = [&](int cur, int depth) -> int {
    if (cur == id) return depth;
    for (int child : pop(cur).inputs) {
      int d = walk(child, depth + 1);
      if (d >= 0) return d;
    }
    return -1;
  };
  int d = walk(root, 0);
  if (d < 0) throw Error(ErrorKind::Internal, "pop not reachable: " + std::to_string(id));
  return d;
}

int Plan::join_count() const {
  int n = 0;
  for (const auto& [id, pop] : pops)
    if (is_join(pop.pop_type)) ++n;
  return n;
}

void validate_plan(const Plan& plan, const Catalog* catalog) {
  if (plan.pops.empty()) throw Error(ErrorKind::Structure, "plan has no pops");

  int return_count = 0;
  for (const auto& [id, pop] : plan.pops) {
    if (id <= 0) throw Error(ErrorKind::Structure, "pop ids must be positive");
    if (id != pop.id) throw Error(ErrorKind::Internal, "pop map key disagrees with pop id");
    if (pop.pop_type == PopType::Return) ++return_count;

    if (static_cast<int>(pop.inputs.size()) != pop_arity(pop.pop_type))
      throw Error(ErrorKind::Arity, "pop " + std::to_string(id) + " (" +
                                        std::string(to_string(pop.pop_type)) + ") has " +
                                        std::to_string(pop.inputs.size()) + " inputs, expected " +
                                        std::to_string(pop_arity(pop.pop_type)));

    if (pop.table_ref.has_value() != is_scan(pop.pop_type))
      throw Error(ErrorKind::Structure, "pop " + std::to_string(id) +
                                            (pop.table_ref ? " must not carry TABLE" : " is missing TABLE"));
    if (pop.index_name.has_value() != (pop.pop_type == PopType::IxScan))
      throw Error(ErrorKind::Structure, "pop " + std::to_string(id) +
                                            (pop.index_name ? " must not carry INDEX" : " is missing INDEX"));
    if (pop.table_ref && (pop.table_ref->table_name.empty() || pop.table_ref->instance.empty()))
      throw Error(ErrorKind::Structure, "pop " + std::to_string(id) + " has empty table reference");
    if (pop.est_cardinality < 0 || pop.est_row_size < 0 || pop.est_cost < 0)
      throw Error(ErrorKind::Structure, "pop " + std::to_string(id) + " has negative estimate");

    for (int child : pop.inputs)
      if (!plan.has_pop(child))
        throw Error(ErrorKind::Structure,
                    "pop " + std::to_string(id) + " references unknown input " + std::to_string(child));
  }

  if (return_count != 1) throw Error(ErrorKind::Structure, "plan must contain exactly one RETURN");
  if (plan.pop(plan.root).pop_type != PopType::Return)
    throw Error(ErrorKind::Structure, "root pop must be the RETURN");

  // Single consumer per pop; the root is consumed by nobody.
  std::map<int, int> consumers;
  for (const auto& [id, pop] : plan.pops)
    for (int child : pop.inputs) consumers[child]++;
  if (consumers.count(plan.root))
    throw Error(ErrorKind::Structure, "RETURN must not be an input");

  // Reachability from the root. Unreached pops either form a cycle or are
  // disconnected; distinguish the two.
  std::set<int> reached;
  std::function<void(int)> mark = [&](int id) {
    if (!reached.insert(id).second)
      throw Error(ErrorKind::Structure, "pop " + std::to_string(id) + " has multiple consumers");
    for (int child : plan.pop(id).inputs) mark(child);
  };
  mark(plan.root);
  if (reached.size() != plan.pops.size()) {
    // Walk the unreached part looking for a back edge.
    std::set<int> visiting, done;
    std::function<void(int)> probe = [&](int id) {
      if (done.count(id)) return;
      if (!visiting.insert(id).second)
        throw Error(ErrorKind::Cycle, "cycle through pop " + std::to_string(id));
      for (int child : plan.pop(id).inputs) probe(child);
      visiting.erase(id);
      done.insert(id);
    };
    for (const auto& [id, pop] : plan.pops)
      if (!reached.count(id)) probe(id);
    throw Error(ErrorKind::Structure, "plan has pops unreachable from the RETURN");
  }

  // Table instances are unique per plan.
  std::set<std::string> instances;
  for (const auto& [id, pop] : plan.pops)
    if (pop.table_ref && !instances.insert(pop.table_ref->instance).second)
      throw Error(ErrorKind::Structure, "duplicate table instance " + pop.table_ref->instance);

  if (catalog) {
    for (const auto& [id, pop] : plan.pops) {
      if (!pop.table_ref) continue;
      auto it = catalog->tables.find(pop.table_ref->table_name);
      if (it == catalog->tables.end())
        throw Error(ErrorKind::UnknownTable, "table not in catalog: " + pop.table_ref->table_name);
      if (pop.pop_type == PopType::TbScan &&
          pop.est_cardinality > static_cast<double>(it->second.cardinality))
        throw Error(ErrorKind::Structure, "scan cardinality exceeds table cardinality for pop " +
                                              std::to_string(id));
    }
  }
}

namespace {

struct StanzaParser {
  std::vector<std::string_view> lines;
  size_t pos = 0;

  [[noreturn]] void fail(size_t line_index, int column, const std::string& msg) {
    throw Error(ErrorKind::Syntax, msg, static_cast<int>(line_index + 1), column);
  }
};

}  // namespace

Plan parse_plan(std::string_view text) {
  Plan plan;
  StanzaParser p;
  p.lines = split_lines(text);

  Lolepop current;
  bool in_stanza = false;
  bool saw_inputs = false;
  int first_pop_id = -1;

  auto flush = [&](size_t line_index) {
    if (!in_stanza) return;
    if (plan.pops.count(current.id))
      throw Error(ErrorKind::DuplicateId, "duplicate pop id " + std::to_string(current.id),
                  static_cast<int>(line_index + 1), 1);
    if (first_pop_id < 0) first_pop_id = current.id;
    plan.pops.emplace(current.id, current);
    current = Lolepop{};
    in_stanza = false;
    saw_inputs = false;
  };

  for (size_t i = 0; i < p.lines.size(); ++i) {
    auto tokens = split_ws(p.lines[i]);
    if (tokens.empty()) {
      flush(i);
      continue;
    }
    const std::string& key = tokens[0];
    if (key == "POP") {
      if (in_stanza) p.fail(i, 1, "POP line inside an open stanza (missing blank line)");
      if (tokens.size() != 3) p.fail(i, 1, "expected: POP <id> <type>");
      auto id = parse_number(tokens[1]);
      if (!id || *id <= 0 || *id != std::floor(*id)) p.fail(i, 5, "pop id must be a positive integer");
      auto type = pop_type_from_string(tokens[2]);
      if (!type) p.fail(i, 5 + static_cast<int>(tokens[1].size()) + 1, "unknown pop type: " + tokens[2]);
      current.id = static_cast<int>(*id);
      current.pop_type = *type;
      in_stanza = true;
    } else if (!in_stanza) {
      p.fail(i, 1, "line outside a POP stanza");
    } else if (key == "CARD") {
      if (tokens.size() != 2) p.fail(i, 1, "expected: CARD <decimal>");
      auto v = parse_number(tokens[1]);
      if (!v || *v < 0) p.fail(i, 6, "CARD must be a non-negative decimal");
      current.est_cardinality = *v;
    } else if (key == "ROWSZ") {
      if (tokens.size() != 2) p.fail(i, 1, "expected: ROWSZ <int>");
      auto v = parse_number(tokens[1]);
      if (!v || *v < 0 || *v != std::floor(*v)) p.fail(i, 7, "ROWSZ must be a non-negative integer");
      current.est_row_size = static_cast<long long>(*v);
    } else if (key == "COST") {
      if (tokens.size() != 2) p.fail(i, 1, "expected: COST <decimal>");
      auto v = parse_number(tokens[1]);
      if (!v || *v < 0) p.fail(i, 6, "COST must be a non-negative decimal");
      current.est_cost = *v;
    } else if (key == "TABLE") {
      if (tokens.size() != 3) p.fail(i, 1, "expected: TABLE <name> <instance>");
      current.table_ref = TableRef{tokens[1], tokens[2]};
    } else if (key == "INDEX") {
      if (tokens.size() != 2) p.fail(i, 1, "expected: INDEX <name>");
      current.index_name = tokens[1];
    } else if (key == "INPUTS") {
      if (saw_inputs) p.fail(i, 1, "repeated INPUTS line");
      if (tokens.size() < 2 || tokens.size() > 3) p.fail(i, 1, "expected: INPUTS <id> [<id>]");
      for (size_t k = 1; k < tokens.size(); ++k) {
        auto v = parse_number(tokens[k]);
        if (!v || *v <= 0 || *v != std::floor(*v)) p.fail(i, 8, "input ids must be positive integers");
        current.inputs.push_back(static_cast<int>(*v));
      }
      saw_inputs = true;
    } else {
      p.fail(i, 1, "unknown line keyword: " + key);
    }
  }
  flush(p.lines.size());

  if (plan.pops.empty()) throw Error(ErrorKind::Syntax, "empty plan text", 1, 1);

  // The RETURN stanza identifies the root.
  int root = -1;
  for (const auto& [id, pop] : plan.pops)
    if (pop.pop_type == PopType::Return) {
      if (root >= 0) throw Error(ErrorKind::Structure, "plan must contain exactly one RETURN");
      root = id;
    }
  if (root < 0) throw Error(ErrorKind::Structure, "plan must contain exactly one RETURN");
  plan.root = root;

  validate_plan(plan);
  return plan;
}

std::string serialize_plan(const Plan& plan) {
  std::ostringstream out;
  bool first = true;
  for (int id : plan.preorder()) {
    const Lolepop& pop = plan.pop(id);
    if (!first) out << "\n";
    first = false;
    out << "POP " << id << " " << to_string(pop.pop_type) << "\n";
    out << "CARD " << format_number(pop.est_cardinality) << "\n";
    out << "ROWSZ " << pop.est_row_size << "\n";
    out << "COST " << format_number(pop.est_cost) << "\n";
    if (pop.table_ref) out << "TABLE " << pop.table_ref->table_name << " " << pop.table_ref->instance << "\n";
    if (pop.index_name) out << "INDEX " << *pop.index_name << "\n";
    if (!pop.inputs.empty()) {
      out << "INPUTS";
      for (int child : pop.inputs) out << " " << child;
      out << "\n";
    }
  }
  return out.str();
}

std::string structure_signature(const Plan& plan, bool canonical_names) {
  std::ostringstream out;
  std::map<std::string, std::string> tables, instances, indexes;
  auto label = [&](std::map<std::string, std::string>& names, const std::string& name,
                   const char* prefix) -> const std::string& {
    if (!canonical_names) return name;
    auto [it, inserted] = names.emplace(name, prefix + std::to_string(names.size() + 1));
    return it->second;
  };
  std::function<void(int, int)> walk = [&](int id, int depth) {
    const Lolepop& pop = plan.pop(id);
    out << depth << ":" << to_string(pop.pop_type);
    if (pop.table_ref)
      out << "(" << label(tables, pop.table_ref->table_name, "T") << ","
          << label(instances, pop.table_ref->instance, "Q") << ")";
    if (pop.index_name) out << "[" << label(indexes, *pop.index_name, "I") << "]";
    out << ";";
    for (int child : pop.inputs) walk(child, depth + 1);
  };
  walk(plan.root, 0);
  return out.str();
}

namespace {

// Walking down one input stream: the unary pops passed and what ends it.
struct StreamProbe {
  std::vector<int> chain;  // unary pops between the join and the terminal
  int terminal = -1;       // scan id or join id
  bool ends_in_join = false;
};

StreamProbe probe_stream(const Plan& plan, int start) {
  StreamProbe probe;
  int cur = start;
  while (true) {
    const Lolepop& pop = plan.pop(cur);
    if (is_join(pop.pop_type)) {
      probe.terminal = cur;
      probe.ends_in_join = true;
      return probe;
    }
    if (is_scan(pop.pop_type)) {
      probe.terminal = cur;
      return probe;
    }
    probe.chain.push_back(cur);
    cur = pop.inputs.at(0);
  }
}

// Leaf-ward subtree ids (used when a stream holds no join at all).
void collect_subtree(const Plan& plan, int start, std::vector<int>& out) {
  out.push_back(start);
  for (int child : plan.pop(start).inputs) collect_subtree(plan, child, out);
}

}  // namespace

std::vector<SubPlan> enumerate_subplans(const Plan& plan, int max_joins) {
  if (max_joins < 1) throw Error(ErrorKind::Range, "max_joins must be >= 1");

  std::vector<int> joins;
  for (const auto& [id, pop] : plan.pops)
    if (is_join(pop.pop_type)) joins.push_back(id);
  std::sort(joins.begin(), joins.end());
  if (joins.empty()) return {};

  // Join adjacency: child join feeds parent join through unary pops only.
  std::map<int, std::vector<int>> adjacent;
  for (int j : joins) {
    for (int input : plan.pop(j).inputs) {
      StreamProbe probe = probe_stream(plan, input);
      if (probe.ends_in_join) {
        adjacent[j].push_back(probe.terminal);
        adjacent[probe.terminal].push_back(j);
      }
    }
  }

  // Enumerate connected join subsets of size <= max_joins. Standard
  // expansion: grow each subset only by joins larger than its anchor to
  // avoid duplicates, then allow any neighbor larger than the newest.
  std::set<std::vector<int>> subsets;
  std::function<void(std::vector<int>&, std::set<int>&)> grow = [&](std::vector<int>& subset,
                                                                    std::set<int>& members) {
    subsets.insert(subset);
    if (static_cast<int>(subset.size()) >= max_joins) return;
    std::set<int> frontier;
    for (int j : subset)
      for (int n : adjacent[j])
        if (!members.count(n)) frontier.insert(n);
    for (int n : frontier) {
      subset.push_back(n);
      members.insert(n);
      grow(subset, members);
      members.erase(n);
      subset.pop_back();
    }
  };
  for (int j : joins) {
    std::vector<int> subset{j};
    std::set<int> members{j};
    grow(subset, members);
  }

  // Deduplicate subsets that differ only in discovery order.
  std::set<std::set<int>> unique_sets;
  std::vector<std::set<int>> final_sets;
  for (const auto& subset : subsets) {
    std::set<int> s(subset.begin(), subset.end());
    if (unique_sets.insert(s).second) final_sets.push_back(s);
  }

  std::vector<SubPlan> result;
  for (const auto& join_set : final_sets) {
    SubPlan sub;
    std::set<int> pops(join_set.begin(), join_set.end());
    // Segment root: the join in the set whose consumer chain does not lead
    // to another join in the set.
    for (int j : join_set) {
      bool is_root = true;
      for (int other : join_set) {
        if (other == j) continue;
        for (int input : plan.pop(other).inputs) {
          StreamProbe probe = probe_stream(plan, input);
          if (probe.ends_in_join && probe.terminal == j) is_root = false;
        }
      }
      if (is_root) sub.root_id = j;
    }
    for (int j : join_set) {
      for (int input : plan.pop(j).inputs) {
        StreamProbe probe = probe_stream(plan, input);
        if (probe.ends_in_join) {
          if (join_set.count(probe.terminal))
            pops.insert(probe.chain.begin(), probe.chain.end());
          // else: cut point, nothing from this stream
        } else {
          std::vector<int> subtree;
          collect_subtree(plan, input, subtree);
          pops.insert(subtree.begin(), subtree.end());
        }
      }
    }
    sub.pop_ids.assign(pops.begin(), pops.end());
    sub.join_ids.assign(join_set.begin(), join_set.end());
    result.push_back(std::move(sub));
  }

  // Bottom-up: deepest segment roots first, then stable tie-breaks.
  std::map<int, int> depth;
  for (const auto& sub : result)
    if (!depth.count(sub.root_id)) depth[sub.root_id] = plan.depth_of(sub.root_id);
  std::sort(result.begin(), result.end(), [&](const SubPlan& a, const SubPlan& b) {
    if (depth[a.root_id] != depth[b.root_id]) return depth[a.root_id] > depth[b.root_id];
    if (a.root_id != b.root_id) return a.root_id < b.root_id;
    if (a.pop_ids.size() != b.pop_ids.size()) return a.pop_ids.size() < b.pop_ids.size();
    return a.pop_ids < b.pop_ids;
  });
  return result;
}

}  // namespace replan
