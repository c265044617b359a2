#include "replan/workload.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

const TableRef& Query::table_by_instance(const std::string& instance) const {
  for (const auto& ref : tables)
    if (ref.instance == instance) return ref;
  throw Error(ErrorKind::Structure, "query " + id + " has no instance " + instance);
}

bool Query::has_instance(const std::string& instance) const {
  for (const auto& ref : tables)
    if (ref.instance == instance) return true;
  return false;
}

bool Query::join_graph_connected() const {
  if (tables.empty()) return false;
  if (tables.size() == 1) return true;
  std::set<std::string> seen{tables.front().instance};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& join : join_preds) {
      bool l = seen.count(join.left.instance), r = seen.count(join.right.instance);
      if (l != r) {
        seen.insert(l ? join.right.instance : join.left.instance);
        grew = true;
      }
    }
  }
  return seen.size() == tables.size();
}

namespace {

[[noreturn]] void fail(size_t line, const std::string& msg) {
  throw Error(ErrorKind::Syntax, msg, static_cast<int>(line + 1), 1);
}

ColumnRef parse_colref(size_t line, const std::string& token) {
  auto dot = token.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == token.size())
    fail(line, "expected <instance>.<column>, got: " + token);
  return ColumnRef{token.substr(0, dot), token.substr(dot + 1)};
}

double parse_selectivity(size_t line, const std::string& token) {
  auto v = parse_number(token);
  if (!v || *v <= 0.0 || *v > 1.0) fail(line, "selectivity must be in (0, 1]: " + token);
  return *v;
}

}  // namespace

Workload parse_workload(std::string_view text) {
  Workload workload;
  Query* current = nullptr;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    auto tokens = split_ws(lines[i]);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string& key = tokens[0];
    if (key == "QUERY") {
      if (tokens.size() != 2) fail(i, "expected: QUERY <id>");
      workload.queries.push_back(Query{});
      current = &workload.queries.back();
      current->id = tokens[1];
    } else if (!current) {
      fail(i, "line before any QUERY");
    } else if (key == "REF") {
      if (tokens.size() != 3) fail(i, "expected: REF <table> <instance>");
      for (const auto& ref : current->tables)
        if (ref.instance == tokens[2]) fail(i, "duplicate instance " + tokens[2]);
      current->tables.push_back(TableRef{tokens[1], tokens[2]});
    } else if (key == "JOIN") {
      // JOIN <inst.col> = <inst.col> EST <sel> TRUE <sel>
      if (tokens.size() != 8 || tokens[2] != "=" || tokens[4] != "EST" || tokens[6] != "TRUE")
        fail(i, "expected: JOIN <inst.col> = <inst.col> EST <sel> TRUE <sel>");
      JoinPred join;
      join.left = parse_colref(i, tokens[1]);
      join.right = parse_colref(i, tokens[3]);
      join.est_selectivity = parse_selectivity(i, tokens[5]);
      join.true_selectivity = parse_selectivity(i, tokens[7]);
      current->join_preds.push_back(std::move(join));
    } else if (key == "PRED") {
      // PRED <inst.col> <op> <value> EST <sel> TRUE <sel>
      if (tokens.size() != 8 || tokens[4] != "EST" || tokens[6] != "TRUE")
        fail(i, "expected: PRED <inst.col> <op> <value> EST <sel> TRUE <sel>");
      LocalPred pred;
      pred.column = parse_colref(i, tokens[1]);
      pred.op = tokens[2];
      pred.value = tokens[3];
      pred.est_selectivity = parse_selectivity(i, tokens[5]);
      pred.true_selectivity = parse_selectivity(i, tokens[7]);
      current->local_preds.push_back(std::move(pred));
    } else {
      fail(i, "unknown workload line: " + key);
    }
  }
  return workload;
}

std::string serialize_workload(const Workload& workload) {
  std::ostringstream out;
  for (const auto& query : workload.queries) {
    out << "QUERY " << query.id << "\n";
    for (const auto& ref : query.tables) out << "REF " << ref.table_name << " " << ref.instance << "\n";
    for (const auto& join : query.join_preds)
      out << "JOIN " << join.left.instance << "." << join.left.column << " = " << join.right.instance
          << "." << join.right.column << " EST " << format_number(join.est_selectivity) << " TRUE "
          << format_number(join.true_selectivity) << "\n";
    for (const auto& pred : query.local_preds)
      out << "PRED " << pred.column.instance << "." << pred.column.column << " " << pred.op << " "
          << pred.value << " EST " << format_number(pred.est_selectivity) << " TRUE "
          << format_number(pred.true_selectivity) << "\n";
  }
  return out.str();
}

void validate_query(const Query& query, const Catalog& catalog) {
  if (query.tables.empty()) throw Error(ErrorKind::Structure, "query " + query.id + " has no tables");
  std::set<std::string> instances;
  for (const auto& ref : query.tables) {
    catalog.table(ref.table_name);
    if (!instances.insert(ref.instance).second)
      throw Error(ErrorKind::Structure, "duplicate instance " + ref.instance + " in query " + query.id);
  }
  auto check_col = [&](const ColumnRef& col) {
    if (!query.has_instance(col.instance))
      throw Error(ErrorKind::Structure, "query " + query.id + " references unknown instance " + col.instance);
    const TableRef& ref = query.table_by_instance(col.instance);
    if (!catalog.columns.count({ref.table_name, col.column}))
      throw Error(ErrorKind::Structure, "query " + query.id + " references undeclared column " +
                                            ref.table_name + "." + col.column);
  };
  for (const auto& join : query.join_preds) {
    check_col(join.left);
    check_col(join.right);
    if (join.left.instance == join.right.instance)
      throw Error(ErrorKind::Structure, "self-join predicate in query " + query.id);
  }
  for (const auto& pred : query.local_preds) check_col(pred.column);
}

std::vector<Query> sample_ranges(const Query& query, const Catalog& catalog, int pred_index, int k) {
  if (pred_index < 0 || pred_index >= static_cast<int>(query.local_preds.size()))
    throw Error(ErrorKind::Range, "predicate index out of range: " + std::to_string(pred_index));
  if (k < 1) throw Error(ErrorKind::Range, "k must be >= 1");
  if (k == 1) return {query};

  const LocalPred& pred = query.local_preds[pred_index];
  const TableRef& ref = query.table_by_instance(pred.column.instance);
  const TableStats& stats = catalog.table(ref.table_name);
  double table_card = static_cast<double>(stats.cardinality);

  // Frequency span: an explicit profile if the catalog has one, otherwise a
  // synthetic spread around the uniform frequency card/distinct.
  double lo = 0, hi = 0;
  auto profile = catalog.profiles.find({ref.table_name, pred.column.column});
  if (profile != catalog.profiles.end() && !profile->second.empty()) {
    lo = *std::min_element(profile->second.begin(), profile->second.end());
    hi = *std::max_element(profile->second.begin(), profile->second.end());
  } else {
    auto col = catalog.columns.find({ref.table_name, pred.column.column});
    double distinct = col != catalog.columns.end() ? static_cast<double>(col->second) : table_card;
    double mean = table_card / std::max(1.0, distinct);
    lo = std::max(1.0, mean / 8.0);
    hi = std::min(table_card, mean * 8.0);
  }

  double ratio = pred.est_selectivity / pred.true_selectivity;

  // The original predicate point always participates so learned bounds
  // cover the plan the pattern was discovered on; k-1 further points are
  // log-spaced across the profile span.
  std::vector<double> true_sels{pred.true_selectivity};
  for (int i = 0; i + 1 < k; ++i) {
    double t = (k == 2) ? 0.0 : static_cast<double>(i) / (k - 2);
    double freq = lo * std::pow(hi / std::max(1e-300, lo), t);
    true_sels.push_back(std::min(1.0, std::max(1.0 / table_card, freq / table_card)));
  }
  std::sort(true_sels.begin(), true_sels.end());
  true_sels.erase(std::unique(true_sels.begin(), true_sels.end()), true_sels.end());

  std::vector<Query> variants;
  for (double true_sel : true_sels) {
    Query variant = query;
    LocalPred& vp = variant.local_preds[pred_index];
    vp.true_selectivity = true_sel;
    vp.est_selectivity = std::min(1.0, std::max(1.0 / table_card, true_sel * ratio));
    variants.push_back(std::move(variant));
  }
  return variants;
}

}  // namespace replan
