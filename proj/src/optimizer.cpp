#include "replan/optimizer.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "replan/error.hpp"

namespace replan {

namespace {

// Plan under construction: structure only, estimates stamped at the end.
struct Shape {
  PopType type = PopType::TbScan;
  std::string table;
  std::string instance;
  std::string index_name;
  std::vector<Shape> children;
};

Plan shape_to_plan(const Shape& shape, const std::string& query_id) {
  Plan plan;
  plan.query_id = query_id;
  int next_id = 1;
  std::function<int(const Shape&)> build = [&](const Shape& node) {
    Lolepop pop;
    pop.id = next_id++;
    pop.pop_type = node.type;
    if (is_scan(node.type)) pop.table_ref = TableRef{node.table, node.instance};
    if (node.type == PopType::IxScan) pop.index_name = node.index_name;
    int id = pop.id;
    plan.pops.emplace(id, std::move(pop));
    for (const Shape& child : node.children) plan.pops.at(id).inputs.push_back(build(child));
    return id;
  };
  Shape root;
  root.type = PopType::Return;
  root.children.push_back(shape);
  plan.root = build(root);
  return plan;
}

class Planner {
 public:
  Planner(const Query& query, const Catalog& catalog, const OptimizerOptions& options)
      : query_(query), catalog_(catalog), options_(options) {
    if (query.tables.size() > 63)
      throw Error(ErrorKind::Range, "query " + query.id + " exceeds 63 table references");
    // Reference order, not name order: exact-cost ties then resolve the
    // same way under any bijective renaming of the workload.
    for (const auto& ref : query.tables) instances_.push_back(ref.instance);
    for (size_t i = 0; i < instances_.size(); ++i) index_of_[instances_[i]] = i;
  }

  PlannerResult run() {
    validate_query(query_, catalog_);
    if (!query_.join_graph_connected() && !options_.allow_cross_products)
      throw Error(ErrorKind::Structure,
                  "query " + query_.id + " has a disconnected join graph (cross products disabled)");

    if (options_.guidelines) ingest_guidelines(*options_.guidelines);

    Shape best = instances_.size() <= 6 ? plan_dp() : plan_greedy();
    Plan plan = shape_to_plan(best, query_.id);
    annotate_plan(plan, query_, catalog_);
    validate_plan(plan, &catalog_);
    return PlannerResult{std::move(plan), std::move(ignored_)};
  }

  Plan sample(std::uint64_t seed) {
    validate_query(query_, catalog_);
    if (!query_.join_graph_connected())
      throw Error(ErrorKind::Structure,
                  "query " + query_.id + " has a disconnected join graph (cross products disabled)");
    std::mt19937_64 rng(seed);

    std::vector<Shape> shapes;
    std::vector<std::uint64_t> masks;
    for (size_t i = 0; i < instances_.size(); ++i) {
      auto paths = access_paths(instances_[i]);
      shapes.push_back(paths[rng() % paths.size()]);
      masks.push_back(1ULL << i);
    }
    while (shapes.size() > 1) {
      std::vector<std::pair<size_t, size_t>> joinable;
      for (size_t a = 0; a < shapes.size(); ++a)
        for (size_t b = a + 1; b < shapes.size(); ++b)
          if (!crossing_preds(masks[a], masks[b]).empty()) joinable.emplace_back(a, b);
      auto [a, b] = joinable[rng() % joinable.size()];
      bool swap_sides = rng() % 2 == 1;
      size_t outer = swap_sides ? b : a, inner = swap_sides ? a : b;
      PopType method = std::array{PopType::NLJoin, PopType::HSJoin, PopType::MSJoin}[rng() % 3];
      Shape joined = make_join(method, shapes[outer], shapes[inner], masks[outer], masks[inner]);
      std::uint64_t merged_mask = masks[a] | masks[b];
      size_t low = std::min(a, b), high = std::max(a, b);
      shapes.erase(shapes.begin() + high);
      masks.erase(masks.begin() + high);
      shapes[low] = std::move(joined);
      masks[low] = merged_mask;
    }
    Plan plan = shape_to_plan(shapes.front(), query_.id);
    annotate_plan(plan, query_, catalog_);
    validate_plan(plan, &catalog_);
    return plan;
  }

 private:
  std::uint64_t full_mask() const { return (1ULL << instances_.size()) - 1; }

  std::vector<const JoinPred*> crossing_preds(std::uint64_t a, std::uint64_t b) const {
    std::vector<const JoinPred*> preds;
    for (const auto& join : query_.join_preds) {
      std::uint64_t l = 1ULL << index_of_.at(join.left.instance);
      std::uint64_t r = 1ULL << index_of_.at(join.right.instance);
      if (((l & a) && (r & b)) || ((l & b) && (r & a))) preds.push_back(&join);
    }
    return preds;
  }

  bool mask_connected(std::uint64_t mask) const {
    if (mask == 0) return false;
    std::uint64_t seen = mask & (~mask + 1);  // lowest set bit
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& join : query_.join_preds) {
        std::uint64_t l = 1ULL << index_of_.at(join.left.instance);
        std::uint64_t r = 1ULL << index_of_.at(join.right.instance);
        if ((l & mask) && (r & mask)) {
          if ((seen & l) && !(seen & r)) seen |= r, grew = true;
          else if ((seen & r) && !(seen & l)) seen |= l, grew = true;
        }
      }
    }
    return seen == mask;
  }

  std::vector<Shape> access_paths(const std::string& instance) const {
    const TableRef& ref = query_.table_by_instance(instance);
    std::vector<Shape> paths;
    Shape table_scan;
    table_scan.type = PopType::TbScan;
    table_scan.table = ref.table_name;
    table_scan.instance = instance;
    paths.push_back(table_scan);

    std::set<std::string> pred_columns;
    for (const auto& pred : query_.local_preds)
      if (pred.column.instance == instance) pred_columns.insert(pred.column.column);

    for (const IndexDef* idx : catalog_.indexes_on(ref.table_name)) {
      Shape index_scan;
      index_scan.type = PopType::IxScan;
      index_scan.table = ref.table_name;
      index_scan.instance = instance;
      index_scan.index_name = idx->index_name;
      // Index-only access covers the instance only when every local
      // predicate sits on the indexed column.
      bool covered = true;
      for (const auto& col : pred_columns)
        if (col != idx->column) covered = false;
      if (covered) paths.push_back(index_scan);
      Shape fetch;
      fetch.type = PopType::Fetch;
      fetch.children.push_back(index_scan);
      paths.push_back(fetch);
    }
    return paths;
  }

  bool shape_delivers_order(const Shape& shape, const std::string& column) const {
    if (shape.type == PopType::Sort) return true;
    if (shape.type == PopType::IxScan) {
      const IndexDef* idx = catalog_.index(shape.index_name);
      return idx && idx->column == column;
    }
    if (shape.type == PopType::Fetch) return shape_delivers_order(shape.children.at(0), column);
    return false;
  }

  Shape make_join(PopType method, Shape outer, Shape inner, std::uint64_t outer_mask,
                  std::uint64_t inner_mask) const {
    if (method == PopType::MSJoin) {
      auto preds = crossing_preds(outer_mask, inner_mask);
      if (!preds.empty()) {
        const JoinPred& key = *preds.front();
        bool left_is_outer = (1ULL << index_of_.at(key.left.instance)) & outer_mask;
        const std::string& outer_col = left_is_outer ? key.left.column : key.right.column;
        const std::string& inner_col = left_is_outer ? key.right.column : key.left.column;
        if (!shape_delivers_order(outer, outer_col)) {
          Shape sort;
          sort.type = PopType::Sort;
          sort.children.push_back(std::move(outer));
          outer = std::move(sort);
        }
        if (!shape_delivers_order(inner, inner_col)) {
          Shape sort;
          sort.type = PopType::Sort;
          sort.children.push_back(std::move(inner));
          inner = std::move(sort);
        }
      }
    }
    Shape join;
    join.type = method;
    join.children.push_back(std::move(outer));
    join.children.push_back(std::move(inner));
    return join;
  }

  double shape_cost(const Shape& shape) const {
    Plan plan = shape_to_plan(shape, query_.id);
    return estimate(plan, query_, catalog_).total;
  }

  // ---- guideline handling -------------------------------------------------

  void ingest_guidelines(const GuidelineDoc& doc) {
    std::uint64_t taken = 0;
    for (size_t g = 0; g < doc.roots.size(); ++g) {
      const GuidelineNode& root = doc.roots[g];
      std::string reason;
      std::uint64_t mask = validate_tree(root, reason);
      if (mask == 0) {
        ignored_.push_back(IgnoredGuideline{static_cast<int>(g), reason});
        continue;
      }
      if (mask & taken) {
        ignored_.push_back(
            IgnoredGuideline{static_cast<int>(g), "overlaps a previously applied guideline"});
        continue;
      }
      taken |= mask;
      register_tree(root);
    }
  }

  // Returns the leaf mask, or 0 with a reason when the tree cannot be honored.
  std::uint64_t validate_tree(const GuidelineNode& node, std::string& reason) {
    try {
      validate_guideline(node);
    } catch (const Error& e) {
      reason = e.what();
      return 0;
    }
    std::function<std::uint64_t(const GuidelineNode&)> walk =
        [&](const GuidelineNode& n) -> std::uint64_t {
      if (!n.is_join_tag()) {
        std::string instance;
        if (n.tabid) {
          instance = *n.tabid;
          if (!query_.has_instance(instance)) {
            reason = "TABID " + instance + " is not a table reference of the query";
            return 0;
          }
        } else {
          int hits = 0;
          for (const auto& ref : query_.tables)
            if (ref.table_name == *n.table) {
              instance = ref.instance;
              ++hits;
            }
          if (hits == 0) {
            reason = "TABLE " + *n.table + " is not referenced by the query";
            return 0;
          }
          if (hits > 1) {
            reason = "TABLE " + *n.table + " is ambiguous; use TABID";
            return 0;
          }
        }
        if (n.tag == PopType::IxScan) {
          const TableRef& ref = query_.table_by_instance(instance);
          auto indexes = catalog_.indexes_on(ref.table_name);
          if (n.index) {
            bool found = false;
            for (const IndexDef* idx : indexes)
              if (idx->index_name == *n.index) found = true;
            if (!found) {
              reason = "INDEX " + *n.index + " does not exist on " + ref.table_name;
              return 0;
            }
          } else if (indexes.empty()) {
            reason = "table " + ref.table_name + " has no index for IXSCAN";
            return 0;
          }
        }
        return 1ULL << index_of_.at(instance);
      }
      std::uint64_t outer = walk(n.children[0]);
      if (outer == 0) return 0;
      std::uint64_t inner = walk(n.children[1]);
      if (inner == 0) return 0;
      if (outer & inner) {
        reason = "guideline references a table instance twice";
        return 0;
      }
      if (crossing_preds(outer, inner).empty() && !options_.allow_cross_products) {
        reason = "guideline join would require a cross product";
        return 0;
      }
      return outer | inner;
    };
    std::uint64_t mask = walk(node);
    if (mask == 0 && reason.empty()) reason = "invalid guideline";
    return mask;
  }

  void register_tree(const GuidelineNode& node) {
    std::function<std::uint64_t(const GuidelineNode&)> walk =
        [&](const GuidelineNode& n) -> std::uint64_t {
      std::uint64_t mask;
      if (n.is_join_tag()) {
        mask = walk(n.children[0]) | walk(n.children[1]);
      } else {
        std::string instance = n.tabid ? *n.tabid : resolve_table(*n.table);
        mask = 1ULL << index_of_.at(instance);
      }
      forced_[mask] = &n;
      return mask;
    };
    walk(node);
  }

  std::string resolve_table(const std::string& table) const {
    for (const auto& ref : query_.tables)
      if (ref.table_name == table) return ref.instance;
    throw Error(ErrorKind::Internal, "unresolved TABLE " + table);
  }

  Shape forced_access(const GuidelineNode& node, const std::string& instance) const {
    const TableRef& ref = query_.table_by_instance(instance);
    std::vector<Shape> candidates;
    for (const Shape& path : access_paths(instance)) {
      if (node.tag == PopType::TbScan && path.type != PopType::TbScan) continue;
      if (node.tag == PopType::IxScan) {
        const Shape* scan = path.type == PopType::IxScan ? &path
                            : path.type == PopType::Fetch ? &path.children[0]
                                                          : nullptr;
        if (!scan || scan->type != PopType::IxScan) continue;
        if (node.index && scan->index_name != *node.index) continue;
      }
      candidates.push_back(path);
    }
    if (candidates.empty())
      throw Error(ErrorKind::Internal, "guideline access tag admits no path for " + ref.instance);
    return pick_cheapest(candidates);
  }

  Shape pick_cheapest(const std::vector<Shape>& candidates) const {
    const Shape* best = nullptr;
    double best_cost = 0;
    std::string best_text;
    for (const Shape& shape : candidates) {
      double cost = shape_cost(shape);
      std::string text = structure_signature(shape_to_plan(shape, query_.id), true);
      if (!best || cost < best_cost || (cost == best_cost && text < best_text)) {
        best = &shape;
        best_cost = cost;
        best_text = std::move(text);
      }
    }
    return *best;
  }

  // ---- search strategies ---------------------------------------------------

  Shape plan_dp() {
    size_t n = instances_.size();
    // Single-table subsets keep every access path: an index access that
    // loses on its own can win inside an index-probing NLJOIN or an
    // order-providing MSJOIN. Multi-table subsets keep the single best;
    // join costs are monotone in child cost, so optimality is preserved.
    std::map<std::uint64_t, std::vector<Shape>> options;

    for (size_t i = 0; i < n; ++i) {
      std::uint64_t mask = 1ULL << i;
      auto it = forced_.find(mask);
      if (it != forced_.end() && !it->second->is_join_tag())
        options[mask] = {forced_access(*it->second, instances_[i])};
      else
        options[mask] = access_paths(instances_[i]);
    }

    for (std::uint64_t mask = 1; mask <= full_mask(); ++mask) {
      if (std::popcount(mask) < 2) continue;
      if (!mask_connected(mask) && !options_.allow_cross_products) continue;

      auto forced_it = forced_.find(mask);
      if (forced_it != forced_.end() && forced_it->second->is_join_tag()) {
        const GuidelineNode& node = *forced_it->second;
        std::uint64_t outer_mask = tree_mask(node.children[0]);
        std::uint64_t inner_mask = tree_mask(node.children[1]);
        auto o = options.find(outer_mask), i = options.find(inner_mask);
        if (o == options.end() || i == options.end())
          throw Error(ErrorKind::Internal, "forced guideline subproblem was not planned");
        Shape joined = best_combination(node.tag, o->second, i->second, outer_mask, inner_mask);
        options[mask] = {std::move(joined)};
        continue;
      }

      std::optional<Shape> chosen;
      double chosen_cost = 0;
      std::string chosen_text;
      for (std::uint64_t outer = (mask - 1) & mask; outer != 0; outer = (outer - 1) & mask) {
        std::uint64_t inner = mask & ~outer;
        auto o = options.find(outer), i = options.find(inner);
        if (o == options.end() || i == options.end()) continue;
        auto preds = crossing_preds(outer, inner);
        if (preds.empty() && !options_.allow_cross_products) continue;
        for (PopType method : {PopType::NLJoin, PopType::HSJoin, PopType::MSJoin}) {
          if (method == PopType::MSJoin && preds.empty()) continue;
          for (const Shape& outer_shape : o->second) {
            for (const Shape& inner_shape : i->second) {
              Shape candidate = make_join(method, outer_shape, inner_shape, outer, inner);
              double cost = shape_cost(candidate);
              std::string text = structure_signature(shape_to_plan(candidate, query_.id), true);
              if (!chosen || cost < chosen_cost || (cost == chosen_cost && text < chosen_text)) {
                chosen = std::move(candidate);
                chosen_cost = cost;
                chosen_text = std::move(text);
              }
            }
          }
        }
      }
      if (chosen) options[mask] = {std::move(*chosen)};
    }

    auto it = options.find(full_mask());
    if (it == options.end())
      throw Error(ErrorKind::Structure, "no plan covers all tables of query " + query_.id);
    if (it->second.size() > 1) return pick_cheapest(it->second);
    return it->second.front();
  }

  // Cheapest (cost, canonical text) combination of the given method over
  // two candidate sets.
  Shape best_combination(PopType method, const std::vector<Shape>& outers,
                         const std::vector<Shape>& inners, std::uint64_t outer_mask,
                         std::uint64_t inner_mask) {
    std::optional<Shape> chosen;
    double chosen_cost = 0;
    std::string chosen_text;
    for (const Shape& outer : outers) {
      for (const Shape& inner : inners) {
        Shape candidate = make_join(method, outer, inner, outer_mask, inner_mask);
        double cost = shape_cost(candidate);
        std::string text = structure_signature(shape_to_plan(candidate, query_.id), true);
        if (!chosen || cost < chosen_cost || (cost == chosen_cost && text < chosen_text)) {
          chosen = std::move(candidate);
          chosen_cost = cost;
          chosen_text = std::move(text);
        }
      }
    }
    return *chosen;
  }

  std::uint64_t tree_mask(const GuidelineNode& node) const {
    if (node.is_join_tag()) return tree_mask(node.children[0]) | tree_mask(node.children[1]);
    std::string instance = node.tabid ? *node.tabid : resolve_table(*node.table);
    return 1ULL << index_of_.at(instance);
  }

  Shape plan_greedy() {
    // Each component carries candidate shapes; single tables start with
    // every access path, merged components collapse to the winner.
    std::vector<std::vector<Shape>> components;
    std::vector<std::uint64_t> masks;
    std::set<std::uint64_t> consumed;

    // Forced trees become pre-built components.
    for (const auto& [mask, node] : forced_) {
      bool top_level = true;
      for (const auto& [other_mask, other] : forced_)
        if (other_mask != mask && (other_mask & mask) == mask) top_level = false;
      if (!top_level) continue;
      components.push_back({build_forced(*node)});
      masks.push_back(mask);
      consumed.insert(mask);
    }
    std::uint64_t consumed_mask = 0;
    for (std::uint64_t m : consumed) consumed_mask |= m;

    for (size_t i = 0; i < instances_.size(); ++i) {
      std::uint64_t mask = 1ULL << i;
      if (mask & consumed_mask) continue;
      components.push_back(access_paths(instances_[i]));
      masks.push_back(mask);
    }

    while (components.size() > 1) {
      int best_a = -1, best_b = -1;
      double best_cost = 0;
      std::string best_text;
      std::optional<Shape> best_shape;
      for (size_t a = 0; a < components.size(); ++a) {
        for (size_t b = a + 1; b < components.size(); ++b) {
          auto preds = crossing_preds(masks[a], masks[b]);
          if (preds.empty() && !options_.allow_cross_products) continue;
          for (PopType method : {PopType::NLJoin, PopType::HSJoin, PopType::MSJoin}) {
            if (method == PopType::MSJoin && preds.empty()) continue;
            for (bool swapped : {false, true}) {
              size_t outer = swapped ? b : a, inner = swapped ? a : b;
              for (const Shape& outer_shape : components[outer]) {
                for (const Shape& inner_shape : components[inner]) {
                  Shape candidate =
                      make_join(method, outer_shape, inner_shape, masks[outer], masks[inner]);
                  double cost = shape_cost(candidate);
                  std::string text = structure_signature(shape_to_plan(candidate, query_.id), true);
                  if (best_a < 0 || cost < best_cost || (cost == best_cost && text < best_text)) {
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                    best_cost = cost;
                    best_text = std::move(text);
                    best_shape = std::move(candidate);
                  }
                }
              }
            }
          }
        }
      }
      if (best_a < 0)
        throw Error(ErrorKind::Structure, "no joinable components left in query " + query_.id);
      std::uint64_t merged = masks[best_a] | masks[best_b];
      components.erase(components.begin() + best_b);
      masks.erase(masks.begin() + best_b);
      components[best_a] = {std::move(*best_shape)};
      masks[best_a] = merged;
    }
    if (components.front().size() > 1) return pick_cheapest(components.front());
    return components.front().front();
  }

  Shape build_forced(const GuidelineNode& node) {
    if (!node.is_join_tag()) {
      std::string instance = node.tabid ? *node.tabid : resolve_table(*node.table);
      return forced_access(node, instance);
    }
    Shape outer = build_forced(node.children[0]);
    Shape inner = build_forced(node.children[1]);
    return make_join(node.tag, std::move(outer), std::move(inner), tree_mask(node.children[0]),
                     tree_mask(node.children[1]));
  }

  const Query& query_;
  const Catalog& catalog_;
  const OptimizerOptions& options_;
  std::vector<std::string> instances_;
  std::map<std::string, size_t> index_of_;
  std::map<std::uint64_t, const GuidelineNode*> forced_;
  std::vector<IgnoredGuideline> ignored_;
};

}  // namespace

PlannerResult optimize(const Query& query, const Catalog& catalog, const OptimizerOptions& options) {
  Planner planner(query, catalog, options);
  return planner.run();
}

Plan random_plan(const Query& query, const Catalog& catalog, std::uint64_t seed) {
  OptimizerOptions options;
  Planner planner(query, catalog, options);
  return planner.sample(seed);
}

}  // namespace replan
