#include <doctest.h>

#include <set>

#include "replan/catalog.hpp"
#include "replan/error.hpp"
#include "replan/workload.hpp"

using namespace replan;

namespace {

const char* kCatalogText =
    "TABLE item 102000 120\n"
    "COLUMN item.i_category 12 1949 74426\n"
    "COLUMN item.i_key 102000\n"
    "TABLE web_sales 720000 140\n"
    "COLUMN web_sales.ws_item 102000\n"
    "COLUMN web_sales.ws_date 1827\n"
    "INDEX i_key_idx ON item(i_key) CLUSTERED\n"
    "INDEX ws_item_idx ON web_sales(ws_item)\n"
    "PARAM sort_heap_pages 800\n"
    "PARAM noise_sigma 0.02\n";

const char* kWorkloadText =
    "QUERY W1\n"
    "REF web_sales Q1\n"
    "REF item Q2\n"
    "JOIN Q1.ws_item = Q2.i_key EST 0.00001 TRUE 0.00001\n"
    "PRED Q2.i_category = Music EST 0.08 TRUE 0.2\n";

}  // namespace

TEST_CASE("catalog parse and serialize round trip") {
  Catalog catalog = parse_catalog(kCatalogText);
  CHECK(catalog.tables.at("item").cardinality == 102000);
  CHECK(catalog.columns.at({"item", "i_category"}) == 12);
  CHECK(catalog.profiles.at({"item", "i_category"}) == std::vector<double>{1949, 74426});
  CHECK(catalog.index("i_key_idx")->clustered);
  CHECK(!catalog.index("ws_item_idx")->clustered);
  CHECK(catalog.params.sort_heap_pages == 800);
  CHECK(catalog.params.noise_sigma == 0.02);
  CHECK(catalog.params.page_size == 4096);  // untouched default

  Catalog again = parse_catalog(serialize_catalog(catalog));
  CHECK(serialize_catalog(again) == serialize_catalog(catalog));
}

TEST_CASE("catalog rejects inconsistencies") {
  CHECK_THROWS_AS(parse_catalog("INDEX i ON ghost(c)\n"), Error);
  CHECK_THROWS_AS(parse_catalog("TABLE t 10 10\nCOLUMN t.c 20\n"), Error);  // distinct > card
  CHECK_THROWS_AS(parse_catalog("TABLE t 10 10\nINDEX i ON t(c)\n"), Error);  // undeclared column
  CHECK_THROWS_AS(parse_catalog("PARAM bogus 1\n"), Error);
  try {
    parse_catalog("TABLE t 0 10\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Syntax);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("workload parse and serialize round trip") {
  Workload workload = parse_workload(kWorkloadText);
  REQUIRE(workload.queries.size() == 1);
  const Query& q = workload.queries[0];
  CHECK(q.id == "W1");
  CHECK(q.tables.size() == 2);
  CHECK(q.join_preds.size() == 1);
  CHECK(q.local_preds.size() == 1);
  CHECK(q.local_preds[0].op == "=");
  CHECK(q.local_preds[0].value == "Music");
  CHECK(q.local_preds[0].est_selectivity == 0.08);
  CHECK(q.local_preds[0].true_selectivity == 0.2);
  CHECK(q.join_graph_connected());

  Workload again = parse_workload(serialize_workload(workload));
  CHECK(again.queries == workload.queries);
}

TEST_CASE("workload validation against the catalog") {
  Catalog catalog = parse_catalog(kCatalogText);
  Workload workload = parse_workload(kWorkloadText);
  CHECK_NOTHROW(validate_query(workload.queries[0], catalog));

  Query bad = workload.queries[0];
  bad.local_preds[0].column.column = "missing";
  CHECK_THROWS_AS(validate_query(bad, catalog), Error);

  Query dup = workload.queries[0];
  dup.tables.push_back(dup.tables[0]);
  CHECK_THROWS_AS(validate_query(dup, catalog), Error);
}

TEST_CASE("selectivities outside (0,1] are rejected") {
  CHECK_THROWS_AS(parse_workload("QUERY X\nREF item Q1\nPRED Q1.c = v EST 0 TRUE 0.5\n"), Error);
  CHECK_THROWS_AS(parse_workload("QUERY X\nREF item Q1\nPRED Q1.c = v EST 0.5 TRUE 1.5\n"), Error);
}

TEST_CASE("sample_ranges draws the stated profile frequencies") {
  Catalog catalog = parse_catalog(kCatalogText);
  Query q = parse_workload(kWorkloadText).queries[0];

  auto variants = sample_ranges(q, catalog, 0, 5);
  std::set<double> trues;
  for (const Query& v : variants) trues.insert(v.local_preds[0].true_selectivity);
  // The profile endpoints 1949 and 74426 over 102000 rows must appear.
  CHECK(trues.count(1949.0 / 102000.0) == 1);
  CHECK(trues.count(74426.0 / 102000.0) == 1);
  // The original predicate point participates too.
  CHECK(trues.count(0.2) == 1);
  // Estimated selectivities keep the original est/true ratio.
  for (const Query& v : variants) {
    const LocalPred& p = v.local_preds[0];
    CHECK(p.est_selectivity == doctest::Approx(p.true_selectivity * 0.08 / 0.2).epsilon(1e-9));
  }
}

TEST_CASE("sample_ranges with k=1 returns the original query") {
  Catalog catalog = parse_catalog(kCatalogText);
  Query q = parse_workload(kWorkloadText).queries[0];
  auto variants = sample_ranges(q, catalog, 0, 1);
  REQUIRE(variants.size() == 1);
  CHECK(variants[0] == q);
}

TEST_CASE("sample_ranges default profile yields k distinct selectivities") {
  Catalog catalog = parse_catalog(kCatalogText);
  Query q = parse_workload(kWorkloadText).queries[0];
  // ws_date has no explicit profile; use a predicate on it.
  q.local_preds[0] = LocalPred{{"Q1", "ws_date"}, "<", "1999", 0.01, 0.01};
  auto variants = sample_ranges(q, catalog, 0, 5);
  std::set<double> trues;
  for (const Query& v : variants) trues.insert(v.local_preds[0].true_selectivity);
  CHECK(trues.size() == 5);
  // Variants arrive ordered by true selectivity.
  for (size_t i = 1; i < variants.size(); ++i)
    CHECK(variants[i - 1].local_preds[0].true_selectivity <
          variants[i].local_preds[0].true_selectivity);
}

TEST_CASE("sample_ranges rejects a bad predicate index") {
  Catalog catalog = parse_catalog(kCatalogText);
  Query q = parse_workload(kWorkloadText).queries[0];
  CHECK_THROWS_AS(sample_ranges(q, catalog, 3, 5), Error);
  CHECK_THROWS_AS(sample_ranges(q, catalog, -1, 5), Error);
}
