#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace replan {

// A graph term: a resource IRI, a string literal, or a numeric literal.
// Numbers compare by value, never by lexical form.
struct Term {
  enum class Kind { Resource, String, Number };

  Kind kind = Kind::Resource;
  std::string text;   // IRI or string payload
  double number = 0;  // numeric payload

  static Term resource(std::string iri) { return Term{Kind::Resource, std::move(iri), 0}; }
  static Term string(std::string value) { return Term{Kind::String, std::move(value), 0}; }
  static Term num(double value) { return Term{Kind::Number, {}, value}; }

  bool is_resource() const { return kind == Kind::Resource; }
  bool is_string() const { return kind == Kind::String; }
  bool is_number() const { return kind == Kind::Number; }

  // Serialized form as it appears in the triple file format.
  std::string lexical() const;

  friend bool operator==(const Term& a, const Term& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::Number ? a.number == b.number : a.text == b.text;
  }
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    if (a.kind != b.kind) return a.kind <=> b.kind;
    if (a.kind == Kind::Number) {
      if (a.number < b.number) return std::strong_ordering::less;
      if (a.number > b.number) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    return a.text <=> b.text;
  }
};

struct Triple {
  Term subject;    // always a resource
  Term predicate;  // always a resource
  Term object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend std::strong_ordering operator<=>(const Triple&, const Triple&) = default;
};

// IRI scheme shared by plans, templates, and the knowledge base.
namespace iri {
inline constexpr std::string_view kPopPrefix = "http://replan/qep/pop/";
inline constexpr std::string_view kPropertyPrefix = "http://replan/qep/property/";

std::string pop(int id);
std::string prop(std::string_view name);
// Extracts the trailing id from a pop IRI; nullopt if the IRI is foreign.
std::optional<int> pop_id(const Term& term);
}  // namespace iri

// In-memory triple set with subject / predicate / (predicate, object)
// indexes. Insert-only; matching workflows treat instances as frozen
// snapshots once built.
class TripleGraph {
 public:
  TripleGraph() = default;
  // Indexes hold pointers into the triple set, so copies rebuild them.
  TripleGraph(const TripleGraph& other);
  TripleGraph& operator=(const TripleGraph& other);
  // Moving a std::set keeps its nodes' addresses; indexes stay valid.
  TripleGraph(TripleGraph&&) = default;
  TripleGraph& operator=(TripleGraph&&) = default;

  void insert(Triple triple);
  void insert(Term subject, Term predicate, Term object);
  bool contains(const Triple& triple) const;
  size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  // Triples in canonical (s, p, o) order.
  const std::set<Triple>& triples() const { return triples_; }

  // All triples matching the bound positions, canonical order. Unbound
  // positions are nullopt. Uses the most selective available index.
  std::vector<Triple> match_basic(const std::optional<Term>& subject,
                                  const std::optional<Term>& predicate,
                                  const std::optional<Term>& object) const;

  std::vector<Term> subjects() const;

  friend bool operator==(const TripleGraph&, const TripleGraph&);

 private:
  std::set<Triple> triples_;
  std::map<Term, std::vector<const Triple*>> by_subject_;
  std::map<Term, std::vector<const Triple*>> by_predicate_;
  std::map<std::pair<Term, Term>, std::vector<const Triple*>> by_predicate_object_;
};

// One triple per line: <s-iri> <p-iri> <object>, where the object is an
// IRI in angle brackets, a quoted string, or a bare decimal. Lines are
// LF-separated and sorted lexicographically by (s, p, o).
std::string serialize_graph(const TripleGraph& graph);
TripleGraph parse_graph(std::string_view text);

}  // namespace replan
