#include "replan/pattern_query.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "replan/codec.hpp"
#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

const Term& Binding::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw Error(ErrorKind::Internal, "binding has no variable " + name);
  return it->second;
}

namespace {

using Assignment = std::map<std::string, Term>;

void collect_query_vars(const PatternQuery& query, std::set<std::string>& out) {
  for (const auto& p : query.patterns) {
    if (p.subject.is_var) out.insert(p.subject.var);
    if (p.object.is_var) out.insert(p.object.var);
  }
  for (const auto& p : query.paths) {
    if (p.subject.is_var) out.insert(p.subject.var);
    if (p.object.is_var) out.insert(p.object.var);
  }
}

void validate_query(const PatternQuery& query) {
  std::set<std::string> vars;
  collect_query_vars(query, vars);
  for (const auto& v : query.select_vars)
    if (!vars.count(v))
      throw Error(ErrorKind::Structure, "select variable ?" + v + " occurs in no pattern");
  for (const auto& f : query.filters) {
    if (const auto* num = std::get_if<NumericFilter>(&f)) {
      if (!vars.count(num->var))
        throw Error(ErrorKind::Structure, "filter variable ?" + num->var + " occurs in no pattern");
    } else {
      const auto& ord = std::get<DistinctOrderFilter>(f);
      if (!vars.count(ord.greater) || !vars.count(ord.lesser))
        throw Error(ErrorKind::Structure, "distinct-order filter references unbound variables");
    }
  }
  for (const auto& p : query.paths)
    if (p.min_hops < 1) throw Error(ErrorKind::Range, "path min_hops must be >= 1");
}

bool check_numeric(const NumericFilter& f, const Term& term) {
  if (!term.is_number()) return false;
  switch (f.op) {
    case CmpOp::Le: return term.number <= f.constant;
    case CmpOp::Ge: return term.number >= f.constant;
    case CmpOp::Lt: return term.number < f.constant;
    case CmpOp::Gt: return term.number > f.constant;
    case CmpOp::Eq: return term.number == f.constant;
  }
  return false;
}

bool check_distinct_order(const Term& greater, const Term& lesser) {
  if (!greater.is_resource() || !lesser.is_resource()) return false;
  return greater.text > lesser.text;
}

// True when the filter's variables are all bound and the filter holds;
// also true when some variable is still unbound (cannot reject yet).
bool filter_admits(const Filter& filter, const Assignment& assignment) {
  if (const auto* num = std::get_if<NumericFilter>(&filter)) {
    auto it = assignment.find(num->var);
    if (it == assignment.end()) return true;
    return check_numeric(*num, it->second);
  }
  const auto& ord = std::get<DistinctOrderFilter>(filter);
  auto g = assignment.find(ord.greater), l = assignment.find(ord.lesser);
  if (g == assignment.end() || l == assignment.end()) return true;
  return check_distinct_order(g->second, l->second);
}

bool all_filters_admit(const PatternQuery& query, const Assignment& assignment) {
  for (const auto& f : query.filters)
    if (!filter_admits(f, assignment)) return false;
  return true;
}

// Layered reachability over hasOutputStream. layers[k] holds the nodes
// reachable by walks of exactly k edges, k capped at the node count
// (the depth bound for tree-shaped plan graphs).
class StreamReach {
 public:
  explicit StreamReach(const TripleGraph& graph) {
    Term pred = Term::resource(iri::prop(prop::kOutputStream));
    for (const Triple& t : graph.match_basic(std::nullopt, pred, std::nullopt)) {
      adjacency_[t.subject].push_back(t.object);
      nodes_.insert(t.subject);
      nodes_.insert(t.object);
    }
    cap_ = static_cast<int>(nodes_.size());
  }

  int cap() const { return cap_; }
  const std::set<Term>& nodes() const { return nodes_; }

  // All terms reachable from `from` by at least min_hops edges.
  std::set<Term> reachable(const Term& from, int min_hops) const {
    std::set<Term> out;
    std::set<Term> frontier{from};
    for (int hop = 1; hop <= cap_; ++hop) {
      std::set<Term> next;
      for (const Term& node : frontier) {
        auto it = adjacency_.find(node);
        if (it == adjacency_.end()) continue;
        for (const Term& target : it->second) next.insert(target);
      }
      if (hop >= min_hops)
        for (const Term& target : next) out.insert(target);
      if (next.empty()) break;
      frontier = std::move(next);
    }
    return out;
  }

  bool connected(const Term& from, const Term& to, int min_hops) const {
    auto set = reachable(from, min_hops);
    return set.count(to) != 0;
  }

 private:
  std::map<Term, std::vector<Term>> adjacency_;
  std::set<Term> nodes_;
  int cap_ = 0;
};

std::vector<Binding> project_and_sort(std::set<Binding>& raw) {
  std::vector<Binding> out(raw.begin(), raw.end());
  std::sort(out.begin(), out.end());
  return out;
}

void project(const PatternQuery& query, const Assignment& assignment, std::set<Binding>& out) {
  Binding b;
  for (const auto& v : query.select_vars) b.vars.emplace(v, assignment.at(v));
  out.insert(std::move(b));
}

}  // namespace

std::vector<Binding> evaluate(const PatternQuery& query, const TripleGraph& graph) {
  validate_query(query);
  StreamReach reach(graph);
  std::set<Binding> results;

  // Pattern order: most-bound first, recomputed as variables bind.
  std::vector<bool> used(query.patterns.size(), false);

  std::function<void(Assignment&, size_t)> solve_paths;
  std::function<void(Assignment&, size_t)> solve_patterns = [&](Assignment& assignment, size_t done) {
    if (done == query.patterns.size()) {
      solve_paths(assignment, 0);
      return;
    }
    // Pick the unprocessed pattern with the most bound positions.
    int best = -1, best_score = -1;
    for (size_t i = 0; i < query.patterns.size(); ++i) {
      if (used[i]) continue;
      const TriplePattern& p = query.patterns[i];
      int score = 1;  // predicate is always constant
      if (!p.subject.is_var || assignment.count(p.subject.var)) score += 2;
      if (!p.object.is_var || assignment.count(p.object.var)) score += 1;
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(i);
      }
    }
    used[best] = true;
    const TriplePattern& p = query.patterns[best];

    std::optional<Term> s, o;
    if (!p.subject.is_var) s = p.subject.term;
    else if (auto it = assignment.find(p.subject.var); it != assignment.end()) s = it->second;
    if (!p.object.is_var) o = p.object.term;
    else if (auto it = assignment.find(p.object.var); it != assignment.end()) o = it->second;

    for (const Triple& t : graph.match_basic(s, p.predicate, o)) {
      std::vector<std::string> bound_here;
      bool ok = true;
      auto bind = [&](const TermOrVar& pos, const Term& value) {
        if (!pos.is_var) return;
        auto it = assignment.find(pos.var);
        if (it == assignment.end()) {
          assignment.emplace(pos.var, value);
          bound_here.push_back(pos.var);
        } else if (!(it->second == value)) {
          ok = false;
        }
      };
      bind(p.subject, t.subject);
      if (ok) bind(p.object, t.object);
      if (ok && all_filters_admit(query, assignment)) solve_patterns(assignment, done + 1);
      for (const auto& v : bound_here) assignment.erase(v);
    }
    used[best] = false;
  };

  solve_paths = [&](Assignment& assignment, size_t path_index) {
    if (path_index == query.paths.size()) {
      if (all_filters_admit(query, assignment)) project(query, assignment, results);
      return;
    }
    const PathPattern& p = query.paths[path_index];
    std::optional<Term> s, o;
    if (!p.subject.is_var) s = p.subject.term;
    else if (auto it = assignment.find(p.subject.var); it != assignment.end()) s = it->second;
    if (!p.object.is_var) o = p.object.term;
    else if (auto it = assignment.find(p.object.var); it != assignment.end()) o = it->second;

    auto try_with = [&](const Term& from, const Term& to) {
      std::vector<std::string> bound_here;
      bool ok = true;
      auto bind = [&](const TermOrVar& pos, const Term& value) {
        if (!pos.is_var) {
          if (!(pos.term == value)) ok = false;
          return;
        }
        auto it = assignment.find(pos.var);
        if (it == assignment.end()) {
          assignment.emplace(pos.var, value);
          bound_here.push_back(pos.var);
        } else if (!(it->second == value)) {
          ok = false;
        }
      };
      bind(p.subject, from);
      if (ok) bind(p.object, to);
      if (ok && all_filters_admit(query, assignment)) solve_paths(assignment, path_index + 1);
      for (const auto& v : bound_here) assignment.erase(v);
    };

    if (s && o) {
      if (reach.connected(*s, *o, p.min_hops)) try_with(*s, *o);
    } else if (s) {
      for (const Term& to : reach.reachable(*s, p.min_hops)) try_with(*s, to);
    } else if (o) {
      for (const Term& from : reach.nodes())
        if (reach.connected(from, *o, p.min_hops)) try_with(from, *o);
    } else {
      for (const Term& from : reach.nodes())
        for (const Term& to : reach.reachable(from, p.min_hops)) try_with(from, to);
    }
  };

  Assignment assignment;
  solve_patterns(assignment, 0);
  return project_and_sort(results);
}

std::vector<Binding> evaluate_brute(const PatternQuery& query, const TripleGraph& graph,
                                    int max_subjects) {
  validate_query(query);
  std::set<Term> subject_set;
  for (const Term& s : graph.subjects()) subject_set.insert(s);
  if (static_cast<int>(subject_set.size()) > max_subjects)
    throw Error(ErrorKind::Range, "brute-force oracle refuses graphs over " +
                                      std::to_string(max_subjects) + " subjects");

  // Candidate universe: every term occurring anywhere in the graph.
  std::set<Term> universe = subject_set;
  for (const Triple& t : graph.triples()) universe.insert(t.object);
  std::vector<Term> candidates(universe.begin(), universe.end());

  std::set<std::string> var_set;
  collect_query_vars(query, var_set);
  std::vector<std::string> vars(var_set.begin(), var_set.end());

  // Independent walk-based path check: boolean relation composition.
  Term pred = Term::resource(iri::prop(prop::kOutputStream));
  std::set<std::pair<Term, Term>> base;
  std::set<Term> path_nodes;
  for (const Triple& t : graph.match_basic(std::nullopt, pred, std::nullopt)) {
    base.insert({t.subject, t.object});
    path_nodes.insert(t.subject);
    path_nodes.insert(t.object);
  }
  int cap = static_cast<int>(path_nodes.size());
  auto path_holds = [&](const Term& from, const Term& to, int min_hops) {
    std::set<std::pair<Term, Term>> reach_exact = base;
    std::set<std::pair<Term, Term>> accumulated;
    for (int k = 1; k <= cap; ++k) {
      if (k >= min_hops)
        for (const auto& pr : reach_exact) accumulated.insert(pr);
      std::set<std::pair<Term, Term>> next;
      for (const auto& [a, b] : reach_exact)
        for (const auto& [c, d] : base)
          if (b == c) next.insert({a, d});
      reach_exact = std::move(next);
      if (reach_exact.empty()) break;
    }
    return accumulated.count({from, to}) != 0;
  };

  auto term_of = [&](const TermOrVar& pos, const Assignment& assignment) -> const Term& {
    return pos.is_var ? assignment.at(pos.var) : pos.term;
  };

  auto satisfied = [&](const Assignment& assignment) {
    for (const auto& p : query.patterns)
      if (!graph.contains(Triple{term_of(p.subject, assignment), p.predicate, term_of(p.object, assignment)}))
        return false;
    for (const auto& p : query.paths)
      if (!path_holds(term_of(p.subject, assignment), term_of(p.object, assignment), p.min_hops))
        return false;
    for (const auto& f : query.filters) {
      if (const auto* num = std::get_if<NumericFilter>(&f)) {
        if (!check_numeric(*num, assignment.at(num->var))) return false;
      } else {
        const auto& ord = std::get<DistinctOrderFilter>(f);
        if (!check_distinct_order(assignment.at(ord.greater), assignment.at(ord.lesser))) return false;
      }
    }
    return true;
  };

  // Partially-bound feasibility check used only to prune the enumeration;
  // the final acceptance above re-checks everything.
  auto feasible = [&](const Assignment& assignment) {
    for (const auto& p : query.patterns) {
      bool s_known = !p.subject.is_var || assignment.count(p.subject.var);
      bool o_known = !p.object.is_var || assignment.count(p.object.var);
      if (s_known && o_known &&
          !graph.contains(Triple{term_of(p.subject, assignment), p.predicate, term_of(p.object, assignment)}))
        return false;
    }
    return all_filters_admit(query, assignment);
  };

  std::set<Binding> results;
  std::function<void(Assignment&, size_t)> enumerate = [&](Assignment& assignment, size_t index) {
    if (!feasible(assignment)) return;
    if (index == vars.size()) {
      if (satisfied(assignment)) project(query, assignment, results);
      return;
    }
    for (const Term& candidate : candidates) {
      assignment.emplace(vars[index], candidate);
      enumerate(assignment, index + 1);
      assignment.erase(vars[index]);
    }
  };
  Assignment assignment;
  enumerate(assignment, 0);
  return project_and_sort(results);
}

std::string explain_query(const PatternQuery& query) {
  std::ostringstream out;
  out << "SELECT";
  for (const auto& v : query.select_vars) out << " ?" << v;
  out << "\nWHERE {\n";
  auto render = [](const TermOrVar& pos) {
    return pos.is_var ? "?" + pos.var : pos.term.lexical();
  };
  for (const auto& p : query.patterns)
    out << "  " << render(p.subject) << " <" << p.predicate.text << "> " << render(p.object) << " .\n";
  for (const auto& p : query.paths)
    out << "  " << render(p.subject) << " <" << iri::prop(prop::kOutputStream) << ">{" << p.min_hops
        << ",} " << render(p.object) << " .\n";
  for (const auto& f : query.filters) {
    if (const auto* num = std::get_if<NumericFilter>(&f)) {
      const char* op = num->op == CmpOp::Le   ? "<="
                       : num->op == CmpOp::Ge ? ">="
                       : num->op == CmpOp::Lt ? "<"
                       : num->op == CmpOp::Gt ? ">"
                                              : "=";
      out << "  FILTER (?" << num->var << " " << op << " " << format_number(num->constant) << ")\n";
    } else {
      const auto& ord = std::get<DistinctOrderFilter>(f);
      out << "  FILTER (STR(?" << ord.greater << ") > STR(?" << ord.lesser << "))\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace replan
