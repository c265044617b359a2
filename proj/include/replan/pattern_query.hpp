#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "replan/triple.hpp"

namespace replan {

// A triple-pattern position: either a constant term or a named variable.
struct TermOrVar {
  bool is_var = false;
  std::string var;
  Term term;

  static TermOrVar variable(std::string name) { return TermOrVar{true, std::move(name), {}}; }
  static TermOrVar constant(Term t) { return TermOrVar{false, {}, std::move(t)}; }
};

struct TriplePattern {
  TermOrVar subject;
  Term predicate;  // predicates are always constants
  TermOrVar object;
};

// Transitive closure over hasOutputStream: object reachable from subject
// via at least min_hops edges.
struct PathPattern {
  TermOrVar subject;
  TermOrVar object;
  int min_hops = 1;
};

enum class CmpOp { Le, Ge, Lt, Gt, Eq };

struct NumericFilter {
  std::string var;
  CmpOp op = CmpOp::Le;
  double constant = 0;
};

// STR(greater) > STR(lesser) over the bound resource IRIs: enforces both
// distinctness and a fixed order between two variables.
struct DistinctOrderFilter {
  std::string greater;
  std::string lesser;
};

using Filter = std::variant<NumericFilter, DistinctOrderFilter>;

struct PatternQuery {
  std::vector<std::string> select_vars;
  std::vector<TriplePattern> patterns;
  std::vector<PathPattern> paths;
  std::vector<Filter> filters;
};

// Variable assignments projected onto select_vars.
struct Binding {
  std::map<std::string, Term> vars;

  const Term& at(const std::string& name) const;
  bool operator==(const Binding&) const = default;
  auto operator<=>(const Binding&) const = default;
};

// Conjunctive evaluation: every assignment of variables to graph terms
// satisfying all patterns, paths, and filters, projected onto select_vars,
// deduplicated, in deterministic lexicographic order.
std::vector<Binding> evaluate(const PatternQuery& query, const TripleGraph& graph);

// Testing oracle: exhaustive enumeration over candidate assignments.
// Refuses graphs with more than max_subjects distinct subjects.
std::vector<Binding> evaluate_brute(const PatternQuery& query, const TripleGraph& graph,
                                    int max_subjects = 12);

// Debug rendering (SELECT / WHERE / FILTER lines). Stable, human-oriented.
std::string explain_query(const PatternQuery& query);

}  // namespace replan
