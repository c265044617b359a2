#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "replan/codec.hpp"
#include "replan/knowledge_base.hpp"
#include "replan/learning.hpp"
#include "replan/scenario.hpp"
#include "replan/util.hpp"

using namespace replan;

namespace {

// Hand-built template: HSJOIN over two table scans with given bounds.
Template hand_template(const std::string& id, double lo, double hi, double ratio = 1.5) {
  Template tpl;
  tpl.template_id = id;
  tpl.improvement_ratio = ratio;
  tpl.provenance = {"wl", "q", "2024-05-01T00:00:00Z"};

  auto subject = [](int k) { return Term::resource(iri::pop(k)); };
  auto property = [](std::string_view name) { return Term::resource(iri::prop(name)); };
  TripleGraph& g = tpl.pattern_graph;
  g.insert(subject(1), property(prop::kPopType), Term::string("HSJOIN"));
  g.insert(subject(1), property(prop::kLowerCardinality), Term::num(lo));
  g.insert(subject(1), property(prop::kHigherCardinality), Term::num(hi));
  for (int k : {2, 3}) {
    g.insert(subject(k), property(prop::kPopType), Term::string("TBSCAN"));
    g.insert(subject(k), property(prop::kLowerCardinality), Term::num(lo));
    g.insert(subject(k), property(prop::kHigherCardinality), Term::num(hi));
    g.insert(subject(k), property(prop::kLowerRowSize), Term::num(10));
    g.insert(subject(k), property(prop::kHigherRowSize), Term::num(200));
    g.insert(subject(k), property(prop::kTableName), Term::string("T" + std::to_string(k - 1)));
    g.insert(subject(k), property(prop::kTableInstance), Term::string("Q" + std::to_string(k - 1)));
    g.insert(subject(k), property(prop::kOutputStream), subject(1));
    g.insert(subject(1), property(k == 2 ? prop::kOuterInputStream : prop::kInnerInputStream),
             subject(k));
  }
  g.insert(subject(3), property(prop::kDistinctAfter), subject(2));

  GuidelineNode join;
  join.tag = PopType::HSJoin;
  GuidelineNode left, right;
  left.tag = PopType::TbScan;
  left.tabid = "Q1";
  right.tag = PopType::TbScan;
  right.tabid = "Q2";
  join.children = {left, right};
  tpl.guideline = join;
  return tpl;
}

KnowledgeBase random_kb(std::mt19937_64& rng) {
  KnowledgeBase kb;
  kb.meta.created = "2024-06-0" + std::to_string(1 + rng() % 9) + "T00:00:00Z";
  kb.meta.provenance.push_back("run " + std::to_string(rng() % 1000));
  int n = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    double lo = static_cast<double>(rng() % 1000);
    double hi = lo + 1 + static_cast<double>(rng() % 100000);
    char hex[33];
    std::snprintf(hex, sizeof(hex), "%016llx%016llx",
                  static_cast<unsigned long long>(rng()), static_cast<unsigned long long>(rng()));
    add_template(kb, hand_template(hex, lo, hi, 1.1 + static_cast<double>(rng() % 50) / 10.0));
  }
  return kb;
}

}  // namespace

TEST_CASE("empty knowledge base saves to a meta-only file") {
  KnowledgeBase kb;
  kb.meta.created = "2024-01-01T00:00:00Z";
  std::string text = save_kb(kb);
  // Only the meta subject appears.
  TripleGraph graph = parse_graph(text);
  for (const Triple& t : graph.triples()) CHECK(t.subject.text == "http://replan/kb/meta");
  KnowledgeBase back = load_kb(text);
  CHECK(back.templates.empty());
  CHECK(back.meta.created == kb.meta.created);
}

TEST_CASE("save/load round trip preserves the base") {
  std::mt19937_64 rng(6502);
  for (int i = 0; i < 100; ++i) {
    KnowledgeBase kb = random_kb(rng);
    KnowledgeBase back = load_kb(save_kb(kb));
    REQUIRE(back == kb);
    CHECK(save_kb(back) == save_kb(kb));
  }
}

TEST_CASE("learned bases survive the file round trip") {
  Scenario scenario = scan_inversion_scenario();
  LearnConfig config;
  config.seed = 2;
  LearnOutcome outcome = learn_workload(scenario.workload, scenario.catalog, config);
  KnowledgeBase kb;
  kb.meta.created = "t";
  for (const Template& tpl : outcome.templates) add_template(kb, tpl);
  REQUIRE(!kb.templates.empty());
  KnowledgeBase back = load_kb(save_kb(kb));
  CHECK(back == kb);
}

TEST_CASE("version and syntax failures are reported with context") {
  KnowledgeBase kb;
  kb.meta.created = "x";
  std::string text = save_kb(kb);

  SUBCASE("missing version") {
    try {
      load_kb("");
      FAIL("expected version error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Version);
    }
  }
  SUBCASE("wrong version") {
    std::string bumped = text;
    auto pos = bumped.find("hasVersion> 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 13, "hasVersion> 9");
    try {
      load_kb(bumped);
      FAIL("expected version error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Version);
    }
  }
  SUBCASE("truncated triple names its line") {
    std::string truncated = text + "<http://replan/kb/meta> <incomplete\n";
    try {
      load_kb(truncated);
      FAIL("expected syntax error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Syntax);
      CHECK(e.line() == 3);  // meta has two triples before it
    }
  }
}

TEST_CASE("merge obeys identity, idempotence, and bound union") {
  KnowledgeBase kb;
  kb.meta.created = "m";
  add_template(kb, hand_template("aaaa", 10, 20));

  SUBCASE("identity") {
    KnowledgeBase empty;
    CHECK(merge_kb(kb, empty).templates == kb.templates);
    KnowledgeBase same = merge_kb(empty, kb);
    CHECK(same.templates == kb.templates);
  }
  SUBCASE("idempotence") {
    KnowledgeBase twice = merge_kb(kb, kb);
    CHECK(twice == kb);
  }
  SUBCASE("union of bounds, maximum of ratios, smaller id survives") {
    KnowledgeBase other;
    other.meta.created = "m";
    add_template(other, hand_template("bbbb", 15, 40, 2.5));
    KnowledgeBase merged = merge_kb(kb, other);
    REQUIRE(merged.templates.size() == 1);
    const Template& tpl = merged.templates.begin()->second;
    CHECK(tpl.template_id == "aaaa");
    CHECK(tpl.improvement_ratio == 2.5);
    TemplateShape shape = decode_template(tpl);
    CHECK(shape.nodes[0].card_bounds->first == 10);
    CHECK(shape.nodes[0].card_bounds->second == 40);
  }
  SUBCASE("different structures stay separate") {
    KnowledgeBase other;
    other.meta.created = "m";
    Template different = hand_template("cccc", 10, 20);
    GuidelineNode& root = different.guideline;
    root.tag = PopType::MSJoin;  // same pattern, different remedy
    add_template(other, different);
    KnowledgeBase merged = merge_kb(kb, other);
    CHECK(merged.templates.size() == 2);
  }
}

TEST_CASE("merge is associative and commutative") {
  std::mt19937_64 rng(31416);
  for (int round = 0; round < 20; ++round) {
    KnowledgeBase a = random_kb(rng);
    KnowledgeBase b = random_kb(rng);
    KnowledgeBase c = random_kb(rng);
    CHECK(merge_kb(a, b).templates == merge_kb(b, a).templates);
    CHECK(merge_kb(merge_kb(a, b), c).templates == merge_kb(a, merge_kb(b, c)).templates);
  }
}

TEST_CASE("stats list one row per template") {
  KnowledgeBase kb;
  kb.meta.created = "s";
  add_template(kb, hand_template("aaaa", 1, 2));
  std::string stats = kb_stats(kb);
  CHECK(stats.find("templates\t1") != std::string::npos);
  CHECK(stats.find("aaaa\t1\t3\t") != std::string::npos);  // one join, three nodes
}

TEST_CASE("atomic file save leaves no temp files behind") {
  KnowledgeBase kb;
  kb.meta.created = "f";
  std::string path = "/tmp/replan_kb_test.kb";
  save_kb_file(kb, path);
  KnowledgeBase back = load_kb_file(path);
  CHECK(back == kb);
  CHECK(!std::ifstream(path + ".tmp").good());
  std::remove(path.c_str());
}
