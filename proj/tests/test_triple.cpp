#include <doctest.h>

#include <random>

#include "replan/codec.hpp"
#include "replan/triple.hpp"

using namespace replan;

namespace {

Term res(int i) { return Term::resource("http://x/" + std::to_string(i)); }

TripleGraph random_graph(std::mt19937_64& rng, int triples) {
  TripleGraph graph;
  for (int i = 0; i < triples; ++i) {
    Term s = res(static_cast<int>(rng() % 20));
    Term p = Term::resource(iri::prop("p" + std::to_string(rng() % 6)));
    Term o;
    switch (rng() % 3) {
      case 0: o = res(static_cast<int>(rng() % 20)); break;
      case 1: o = Term::string("v" + std::to_string(rng() % 10)); break;
      default: o = Term::num(static_cast<double>(rng() % 1000) / 4.0);
    }
    graph.insert(s, p, o);
  }
  return graph;
}

}  // namespace

TEST_CASE("set semantics: duplicate insert is a no-op") {
  TripleGraph graph;
  graph.insert(res(1), res(2), Term::num(3));
  graph.insert(res(1), res(2), Term::num(3));
  CHECK(graph.size() == 1);
}

TEST_CASE("numeric objects compare by value, not lexical form") {
  TripleGraph graph = parse_graph("<a> <p> 2949250\n<a> <p> 2.94925e+06\n");
  CHECK(graph.size() == 1);
  CHECK(graph.contains(Triple{Term::resource("a"), Term::resource("p"), Term::num(2949250.0)}));
}

TEST_CASE("literals cannot be subjects") {
  TripleGraph graph;
  CHECK_THROWS_AS(graph.insert(Term::num(1), res(1), res(2)), Error);
}

TEST_CASE("match_basic equals a linear scan under every binding pattern") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 40; ++round) {
    TripleGraph graph = random_graph(rng, 200 + static_cast<int>(rng() % 200));
    std::vector<Triple> all(graph.triples().begin(), graph.triples().end());

    for (int probe = 0; probe < 25; ++probe) {
      const Triple& pick = all[rng() % all.size()];
      std::optional<Term> s = (rng() % 2) ? std::optional<Term>(pick.subject) : std::nullopt;
      std::optional<Term> p = (rng() % 2) ? std::optional<Term>(pick.predicate) : std::nullopt;
      std::optional<Term> o = (rng() % 2) ? std::optional<Term>(pick.object) : std::nullopt;

      std::vector<Triple> expected;
      for (const Triple& t : all)
        if ((!s || t.subject == *s) && (!p || t.predicate == *p) && (!o || t.object == *o))
          expected.push_back(t);
      CHECK(graph.match_basic(s, p, o) == expected);
    }
  }
}

TEST_CASE("index coherence on a ten-thousand-triple graph") {
  std::mt19937_64 rng(404);
  TripleGraph graph = random_graph(rng, 10000);
  std::vector<Triple> all(graph.triples().begin(), graph.triples().end());
  Term p = Term::resource(iri::prop("p3"));
  std::vector<Triple> expected;
  for (const Triple& t : all)
    if (t.predicate == p) expected.push_back(t);
  CHECK(graph.match_basic(std::nullopt, p, std::nullopt) == expected);
}

TEST_CASE("bound lookups") {
  TripleGraph graph;
  graph.insert(res(1), res(9), Term::string("x"));
  CHECK(graph.match_basic(res(1), res(9), Term::string("x")).size() == 1);
  CHECK(graph.match_basic(std::nullopt, res(8), std::nullopt).empty());
  CHECK(graph.match_basic(std::nullopt, std::nullopt, std::nullopt).size() == 1);
}

TEST_CASE("serialization orders lexicographically and round trips") {
  TripleGraph graph;
  graph.insert(res(2), res(1), Term::string("a \"quoted\"\nline"));
  graph.insert(res(1), res(1), Term::num(0.5));
  graph.insert(res(1), res(1), Term::num(-3));
  std::string text = serialize_graph(graph);
  // subject <http://x/1> sorts before <http://x/2>
  CHECK(text.find("http://x/1") < text.find("http://x/2"));
  TripleGraph back = parse_graph(text);
  CHECK(back == graph);
  CHECK(serialize_graph(back) == text);
}

TEST_CASE("copies rebuild their indexes") {
  TripleGraph copy;
  {
    TripleGraph original;
    original.insert(res(1), res(2), Term::string("v"));
    original.insert(res(1), res(3), Term::num(7));
    copy = original;
  }  // source destroyed; the copy's indexes must not dangle
  CHECK(copy.match_basic(res(1), std::nullopt, std::nullopt).size() == 2);
  CHECK(copy.match_basic(std::nullopt, res(3), Term::num(7)).size() == 1);
  copy.insert(res(3), res(2), Term::string("w"));
  CHECK(copy.size() == 3);
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_graph("<a> <p> 1\n<b> <p>\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Syntax);
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_graph("\"lit\" <p> <x>\n"), Error);
  CHECK_THROWS_AS(parse_graph("<a> <p> 1 extra\n"), Error);
}
