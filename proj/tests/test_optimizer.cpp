#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

#include "replan/cost_model.hpp"
#include "replan/optimizer.hpp"
#include "replan/scenario.hpp"

using namespace replan;

namespace {

// Exhaustive plan enumeration: every connected join tree over the query's
// instances, every join method and orientation, every access path, with
// the same deterministic SORT insertion under merge joins. Used as the
// optimality oracle for the dynamic program.
struct BruteForce {
  const Query& query;
  const Catalog& catalog;

  std::vector<Plan> all_plans() {
    std::vector<std::string> instances;
    for (const auto& ref : query.tables) instances.push_back(ref.instance);
    std::vector<Plan> out;
    for (const std::string& text : enumerate(instances)) out.push_back(parse_plan(text));
    return out;
  }

  // Enumerate serialized plans to keep the recursion simple: each entry is
  // a full plan text rooted at RETURN.
  std::vector<std::string> enumerate(const std::vector<std::string>& instances) {
    std::vector<std::string> out;
    for (const auto& tree : trees(std::set<std::string>(instances.begin(), instances.end()))) {
      out.push_back(serialize_plan(finish(tree)));
    }
    return out;
  }

  struct Node {
    PopType type;
    std::string instance;  // scans
    std::string index;
    std::vector<Node> children;
  };

  std::vector<Node> access_nodes(const std::string& instance) {
    const TableRef& ref = query.table_by_instance(instance);
    std::vector<Node> out;
    out.push_back(Node{PopType::TbScan, instance, "", {}});
    std::set<std::string> pred_cols;
    for (const auto& pred : query.local_preds)
      if (pred.column.instance == instance) pred_cols.insert(pred.column.column);
    for (const IndexDef* idx : catalog.indexes_on(ref.table_name)) {
      bool covered = true;
      for (const auto& col : pred_cols)
        if (col != idx->column) covered = false;
      if (covered) out.push_back(Node{PopType::IxScan, instance, idx->index_name, {}});
      Node fetch{PopType::Fetch, "", "", {Node{PopType::IxScan, instance, idx->index_name, {}}}};
      out.push_back(fetch);
    }
    return out;
  }

  bool connected_pair(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& join : query.join_preds) {
      bool la = a.count(join.left.instance), lb = b.count(join.left.instance);
      bool ra = a.count(join.right.instance), rb = b.count(join.right.instance);
      if ((la && rb) || (lb && ra)) return true;
    }
    return false;
  }

  const JoinPred* first_crossing(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& join : query.join_preds) {
      bool la = a.count(join.left.instance), lb = b.count(join.left.instance);
      bool ra = a.count(join.right.instance), rb = b.count(join.right.instance);
      if ((la && rb) || (lb && ra)) return &join;
    }
    return nullptr;
  }

  bool delivers(const Node& node, const std::string& column) {
    if (node.type == PopType::Sort) return true;
    if (node.type == PopType::IxScan) {
      const IndexDef* idx = catalog.index(node.index);
      return idx && idx->column == column;
    }
    if (node.type == PopType::Fetch) return delivers(node.children[0], column);
    return false;
  }

  std::vector<Node> trees(const std::set<std::string>& instances) {
    std::vector<Node> out;
    if (instances.size() == 1) return access_nodes(*instances.begin());

    // Every ordered split into two non-empty connected halves.
    std::vector<std::string> list(instances.begin(), instances.end());
    size_t n = list.size();
    for (std::uint64_t mask = 1; mask + 1 < (1ULL << n); ++mask) {
      std::set<std::string> outer, inner;
      for (size_t i = 0; i < n; ++i)
        (mask & (1ULL << i) ? outer : inner).insert(list[i]);
      if (!connected_pair(outer, inner)) continue;
      auto outer_trees = trees(outer);
      auto inner_trees = trees(inner);
      if (outer_trees.empty() || inner_trees.empty()) continue;
      const JoinPred* key = first_crossing(outer, inner);
      for (const Node& o : outer_trees) {
        for (const Node& i : inner_trees) {
          for (PopType method : {PopType::NLJoin, PopType::HSJoin, PopType::MSJoin}) {
            Node join{method, "", "", {o, i}};
            if (method == PopType::MSJoin && key) {
              const std::string& outer_col =
                  outer.count(key->left.instance) ? key->left.column : key->right.column;
              const std::string& inner_col =
                  inner.count(key->left.instance) ? key->left.column : key->right.column;
              if (!delivers(join.children[0], outer_col))
                join.children[0] = Node{PopType::Sort, "", "", {join.children[0]}};
              if (!delivers(join.children[1], inner_col))
                join.children[1] = Node{PopType::Sort, "", "", {join.children[1]}};
            }
            out.push_back(join);
          }
        }
      }
    }
    return out;
  }

  // Sub-trees of disconnected subsets come back empty, which prunes the
  // corresponding splits upstream.
  Plan finish(const Node& tree) {
    Plan plan;
    int next = 1;
    std::function<int(const Node&)> build = [&](const Node& node) -> int {
      Lolepop pop;
      pop.id = next++;
      pop.pop_type = node.type;
      if (is_scan(node.type)) {
        const TableRef& ref = query.table_by_instance(node.instance);
        pop.table_ref = ref;
      }
      if (node.type == PopType::IxScan) pop.index_name = node.index;
      int id = pop.id;
      plan.pops.emplace(id, std::move(pop));
      for (const Node& child : node.children) plan.pops.at(id).inputs.push_back(build(child));
      return id;
    };
    Node root{PopType::Return, "", "", {tree}};
    plan.root = build(root);
    plan.query_id = query.id;
    annotate_plan(plan, query, catalog);
    return plan;
  }
};

}  // namespace

TEST_CASE("single-table query plans as a RETURN over the cheapest access") {
  Scenario scenario = scan_inversion_scenario();
  Query query = parse_workload("QUERY ONE\nREF customer_demo Q1\nPRED Q1.cd_flag = 1 EST 0.002 TRUE 0.6\n")
                    .queries[0];
  Plan plan = optimize(query, scenario.catalog).plan;
  REQUIRE(plan.pops.size() == 2);
  CHECK(plan.pop(plan.root).pop_type == PopType::Return);
  // est 0.002 over an unclustered index: 3 + 0.002*9766*8 = 159.3 beats the
  // 9766-page table scan.
  CHECK(plan.pop(2).pop_type == PopType::IxScan);
}

TEST_CASE("dynamic programming matches exhaustive enumeration on the scenario suite") {
  for (const Scenario& scenario : motif_scenarios()) {
    for (const Query& query : scenario.workload.queries) {
      REQUIRE(query.tables.size() <= 4);
      Plan chosen = optimize(query, scenario.catalog).plan;
      double chosen_cost = estimate(chosen, query, scenario.catalog).total;

      BruteForce oracle{query, scenario.catalog};
      double best = -1;
      for (const Plan& plan : oracle.all_plans()) {
        double cost = estimate(plan, query, scenario.catalog).total;
        if (best < 0 || cost < best) best = cost;
      }
      REQUIRE(best > 0);
      CHECK(chosen_cost == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("dynamic programming matches exhaustive enumeration on random small queries") {
  Scenario scenario = chain_scenario(4);
  for (const Query& query : scenario.workload.queries) {
    Plan chosen = optimize(query, scenario.catalog).plan;
    double chosen_cost = estimate(chosen, query, scenario.catalog).total;
    BruteForce oracle{query, scenario.catalog};
    double best = -1;
    for (const Plan& plan : oracle.all_plans()) {
      double cost = estimate(plan, query, scenario.catalog).total;
      if (best < 0 || cost < best) best = cost;
    }
    CHECK(chosen_cost == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("disconnected join graphs are rejected unless cross products are enabled") {
  Scenario scenario = chain_scenario(2);
  Query query = scenario.workload.queries[0];
  query.join_preds.clear();
  CHECK_THROWS_AS(optimize(query, scenario.catalog), Error);
  OptimizerOptions options;
  options.allow_cross_products = true;
  Plan plan = optimize(query, scenario.catalog, options).plan;
  CHECK(plan.join_count() == 1);
}

TEST_CASE("guideline forces the hash join when the estimates prefer the merge join") {
  Scenario scenario = sort_spill_scenario();
  const Query& query = scenario.workload.queries[0];

  Plan unforced = optimize(query, scenario.catalog).plan;
  bool has_msjoin = false;
  for (const auto& [id, pop] : unforced.pops)
    if (pop.pop_type == PopType::MSJoin) has_msjoin = true;
  REQUIRE(has_msjoin);  // the mis-estimated default

  GuidelineDoc doc = parse_guideline_xml(
      "<OPTGUIDELINES>\n"
      "  <HSJOIN>\n"
      "    <TBSCAN TABID='Q2'/>\n"
      "    <TBSCAN TABID='Q1'/>\n"
      "  </HSJOIN>\n"
      "</OPTGUIDELINES>\n");
  OptimizerOptions options;
  options.guidelines = &doc;
  PlannerResult forced = optimize(query, scenario.catalog, options);
  CHECK(forced.ignored.empty());

  // Full-plan guideline: the join tree is exactly the guideline tree.
  const Lolepop& join = forced.plan.pop(forced.plan.pop(forced.plan.root).inputs[0]);
  REQUIRE(join.pop_type == PopType::HSJoin);
  CHECK(forced.plan.pop(join.inputs[0]).table_ref->instance == "Q2");
  CHECK(forced.plan.pop(join.inputs[0]).pop_type == PopType::TbScan);
  CHECK(forced.plan.pop(join.inputs[1]).table_ref->instance == "Q1");
}

TEST_CASE("guidelines referencing absent instances are skipped and reported") {
  Scenario scenario = sort_spill_scenario();
  const Query& query = scenario.workload.queries[0];
  Plan baseline = optimize(query, scenario.catalog).plan;

  GuidelineDoc doc = parse_guideline_xml(
      "<OPTGUIDELINES>\n"
      "  <TBSCAN TABID='Q9'/>\n"
      "</OPTGUIDELINES>\n");
  OptimizerOptions options;
  options.guidelines = &doc;
  PlannerResult result = optimize(query, scenario.catalog, options);
  REQUIRE(result.ignored.size() == 1);
  CHECK(result.ignored[0].root_index == 0);
  CHECK(result.plan == baseline);  // plan unchanged
}

TEST_CASE("conflicting guidelines: the later one is ignored") {
  Scenario scenario = combined_scenario();
  const Query& query = scenario.workload.queries[0];  // SPILL1 over Q1, Q2
  GuidelineDoc doc = parse_guideline_xml(
      "<OPTGUIDELINES>\n"
      "  <HSJOIN>\n"
      "    <TBSCAN TABID='Q2'/>\n"
      "    <TBSCAN TABID='Q1'/>\n"
      "  </HSJOIN>\n"
      "  <MSJOIN>\n"
      "    <TBSCAN TABID='Q1'/>\n"
      "    <TBSCAN TABID='Q2'/>\n"
      "  </MSJOIN>\n"
      "</OPTGUIDELINES>\n");
  OptimizerOptions options;
  options.guidelines = &doc;
  PlannerResult result = optimize(query, scenario.catalog, options);
  REQUIRE(result.ignored.size() == 1);
  CHECK(result.ignored[0].root_index == 1);
  bool has_hsjoin = false;
  for (const auto& [id, pop] : result.plan.pops)
    if (pop.pop_type == PopType::HSJoin) has_hsjoin = true;
  CHECK(has_hsjoin);
}

TEST_CASE("guideline access tags pin the access method and index") {
  Scenario scenario = scan_inversion_scenario();
  const Query& query = scenario.workload.queries[0];
  GuidelineDoc doc = parse_guideline_xml(
      "<OPTGUIDELINES>\n"
      "  <TBSCAN TABID='Q1'/>\n"
      "</OPTGUIDELINES>\n");
  OptimizerOptions options;
  options.guidelines = &doc;
  Plan plan = optimize(query, scenario.catalog, options).plan;
  for (const auto& [id, pop] : plan.pops)
    if (pop.table_ref && pop.table_ref->instance == "Q1") CHECK(pop.pop_type == PopType::TbScan);
}

TEST_CASE("TABLE attribute resolves unambiguous references") {
  Scenario scenario = scan_inversion_scenario();
  const Query& query = scenario.workload.queries[0];
  GuidelineDoc doc =
      parse_guideline_xml("<OPTGUIDELINES><TBSCAN TABLE='customer_demo'/></OPTGUIDELINES>");
  OptimizerOptions options;
  options.guidelines = &doc;
  PlannerResult result = optimize(query, scenario.catalog, options);
  CHECK(result.ignored.empty());
}

TEST_CASE("random plans are deterministic per seed") {
  Scenario scenario = sort_spill_scenario();
  const Query& query = scenario.workload.queries[0];
  Plan a = random_plan(query, scenario.catalog, 99);
  Plan b = random_plan(query, scenario.catalog, 99);
  CHECK(a == b);
  CHECK_NOTHROW(validate_plan(a, &scenario.catalog));
}

TEST_CASE("random plans cover the whole two-table space") {
  // Space: 2 orientations x 3 methods x paths(Q1) x paths(Q2). open_in has
  // one clustered index with no local predicate (3 paths), entry_idx one
  // unclustered index on its predicate column (3 paths): 54 combinations.
  Scenario scenario = sort_spill_scenario();
  const Query& query = scenario.workload.queries[0];
  std::map<std::string, int> counts;
  for (int seed = 0; seed < 2000; ++seed)
    counts[structure_signature(random_plan(query, scenario.catalog, seed), false)]++;
  CHECK(counts.size() == 54);
  // Uniformity sanity: no structure may dominate or starve; expectation is
  // 2000/54 = 37 draws each.
  int low = 1 << 30, high = 0;
  for (const auto& [sig, count] : counts) {
    low = std::min(low, count);
    high = std::max(high, count);
  }
  CHECK(low >= 10);
  CHECK(high <= 90);
}

TEST_CASE("one-table query samples access paths only") {
  Scenario scenario = scan_inversion_scenario();
  Query query = parse_workload("QUERY ONE\nREF customer_demo Q1\nPRED Q1.cd_flag = 1 EST 0.002 TRUE 0.6\n")
                    .queries[0];
  std::set<std::string> shapes;
  for (int seed = 0; seed < 100; ++seed) {
    Plan plan = random_plan(query, scenario.catalog, seed);
    CHECK(plan.join_count() == 0);
    shapes.insert(structure_signature(plan, false));
  }
  // TBSCAN, bare IXSCAN, FETCH over IXSCAN.
  CHECK(shapes.size() == 3);
}

TEST_CASE("merge joins get sort wraps exactly where index order is missing") {
  // Join columns: Q1.sold_date = Q2.d_date, both indexed.
  Scenario scenario = stale_range_scenario();
  const Query& query = scenario.workload.queries[0];
  int ordered_inputs = 0, sorted_inputs = 0;
  for (int seed = 0; seed < 200; ++seed) {
    Plan plan = random_plan(query, scenario.catalog, seed);
    for (const auto& [id, pop] : plan.pops) {
      if (pop.pop_type != PopType::MSJoin) continue;
      for (int input : pop.inputs) {
        const Lolepop& child = plan.pop(input);
        if (child.pop_type == PopType::Sort) {
          ++sorted_inputs;
          // Never a redundant sort over an index-ordered access.
          const Lolepop& below = plan.pop(child.inputs[0]);
          bool below_ordered =
              delivers_order(plan, child.inputs[0], scenario.catalog, "sold_date") ||
              delivers_order(plan, child.inputs[0], scenario.catalog, "d_date");
          CHECK(!below_ordered);
        } else {
          ++ordered_inputs;
          const Lolepop* scan = &child;
          while (!scan->table_ref) scan = &plan.pop(scan->inputs.at(0));
          std::string column = scan->table_ref->instance == "Q1" ? "sold_date" : "d_date";
          CHECK(delivers_order(plan, input, scenario.catalog, column));
        }
      }
    }
  }
  CHECK(ordered_inputs > 0);
  CHECK(sorted_inputs > 0);
}
