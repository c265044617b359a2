#include "replan/triple.hpp"

#include <sstream>

#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

namespace {

std::string escape_string(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string Term::lexical() const {
  switch (kind) {
    case Kind::Resource: return "<" + text + ">";
    case Kind::String: return "\"" + escape_string(text) + "\"";
    case Kind::Number: return format_number(number);
  }
  return {};
}

namespace iri {

std::string pop(int id) { return std::string(kPopPrefix) + std::to_string(id); }

std::string prop(std::string_view name) { return std::string(kPropertyPrefix) + std::string(name); }

std::optional<int> pop_id(const Term& term) {
  if (!term.is_resource() || !starts_with(term.text, kPopPrefix)) return std::nullopt;
  auto tail = std::string_view(term.text).substr(kPopPrefix.size());
  auto v = parse_number(tail);
  if (!v || *v <= 0) return std::nullopt;
  return static_cast<int>(*v);
}

}  // namespace iri

TripleGraph::TripleGraph(const TripleGraph& other) {
  for (const Triple& t : other.triples_) insert(t);
}

TripleGraph& TripleGraph::operator=(const TripleGraph& other) {
  if (this == &other) return *this;
  triples_.clear();
  by_subject_.clear();
  by_predicate_.clear();
  by_predicate_object_.clear();
  for (const Triple& t : other.triples_) insert(t);
  return *this;
}

void TripleGraph::insert(Triple triple) {
  if (!triple.subject.is_resource() || !triple.predicate.is_resource())
    throw Error(ErrorKind::Structure, "subject and predicate must be resources");
  auto [it, inserted] = triples_.insert(std::move(triple));
  if (!inserted) return;
  const Triple* ptr = &*it;
  by_subject_[ptr->subject].push_back(ptr);
  by_predicate_[ptr->predicate].push_back(ptr);
  by_predicate_object_[{ptr->predicate, ptr->object}].push_back(ptr);
}

void TripleGraph::insert(Term subject, Term predicate, Term object) {
  insert(Triple{std::move(subject), std::move(predicate), std::move(object)});
}

bool TripleGraph::contains(const Triple& triple) const { return triples_.count(triple) != 0; }

std::vector<Triple> TripleGraph::match_basic(const std::optional<Term>& subject,
                                             const std::optional<Term>& predicate,
                                             const std::optional<Term>& object) const {
  auto matches = [&](const Triple& t) {
    return (!subject || t.subject == *subject) && (!predicate || t.predicate == *predicate) &&
           (!object || t.object == *object);
  };

  std::vector<Triple> out;
  auto collect = [&](const std::vector<const Triple*>& bucket) {
    for (const Triple* t : bucket)
      if (matches(*t)) out.push_back(*t);
  };

  if (predicate && object) {
    auto it = by_predicate_object_.find({*predicate, *object});
    if (it != by_predicate_object_.end()) collect(it->second);
  } else if (subject) {
    auto it = by_subject_.find(*subject);
    if (it != by_subject_.end()) collect(it->second);
  } else if (predicate) {
    auto it = by_predicate_.find(*predicate);
    if (it != by_predicate_.end()) collect(it->second);
  } else {
    for (const Triple& t : triples_)
      if (matches(t)) out.push_back(t);
    return out;  // already canonical order
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Term> TripleGraph::subjects() const {
  std::vector<Term> out;
  out.reserve(by_subject_.size());
  for (const auto& [subject, bucket] : by_subject_) out.push_back(subject);
  return out;
}

bool operator==(const TripleGraph& a, const TripleGraph& b) { return a.triples_ == b.triples_; }

std::string serialize_graph(const TripleGraph& graph) {
  std::ostringstream out;
  for (const Triple& t : graph.triples())
    out << t.subject.lexical() << " " << t.predicate.lexical() << " " << t.object.lexical() << "\n";
  return out.str();
}

namespace {

// Reads one term starting at `pos`; advances pos past the term.
Term parse_term(std::string_view line, size_t& pos, size_t line_no) {
  while (pos < line.size() && line[pos] == ' ') ++pos;
  if (pos >= line.size())
    throw Error(ErrorKind::Syntax, "truncated triple line", static_cast<int>(line_no), static_cast<int>(pos + 1));
  if (line[pos] == '<') {
    auto end = line.find('>', pos);
    if (end == std::string_view::npos)
      throw Error(ErrorKind::Syntax, "unterminated IRI", static_cast<int>(line_no), static_cast<int>(pos + 1));
    Term t = Term::resource(std::string(line.substr(pos + 1, end - pos - 1)));
    pos = end + 1;
    return t;
  }
  if (line[pos] == '"') {
    std::string value;
    size_t i = pos + 1;
    for (; i < line.size(); ++i) {
      char c = line[i];
      if (c == '\\') {
        if (i + 1 >= line.size())
          throw Error(ErrorKind::Syntax, "dangling escape", static_cast<int>(line_no), static_cast<int>(i + 1));
        char esc = line[++i];
        if (esc == 'n') value += '\n';
        else if (esc == 't') value += '\t';
        else if (esc == '"') value += '"';
        else if (esc == '\\') value += '\\';
        else throw Error(ErrorKind::Syntax, "unknown escape", static_cast<int>(line_no), static_cast<int>(i + 1));
      } else if (c == '"') {
        pos = i + 1;
        return Term::string(value);
      } else {
        value += c;
      }
    }
    throw Error(ErrorKind::Syntax, "unterminated string literal", static_cast<int>(line_no),
                static_cast<int>(pos + 1));
  }
  size_t end = pos;
  while (end < line.size() && line[end] != ' ') ++end;
  auto v = parse_number(line.substr(pos, end - pos));
  if (!v)
    throw Error(ErrorKind::Syntax, "expected IRI, string, or decimal", static_cast<int>(line_no),
                static_cast<int>(pos + 1));
  pos = end;
  return Term::num(*v);
}

}  // namespace

TripleGraph parse_graph(std::string_view text) {
  TripleGraph graph;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    bool blank = true;
    for (char c : line)
      if (c != ' ' && c != '\t') blank = false;
    if (blank) continue;
    size_t pos = 0;
    Term s = parse_term(line, pos, i + 1);
    Term p = parse_term(line, pos, i + 1);
    Term o = parse_term(line, pos, i + 1);
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos != line.size())
      throw Error(ErrorKind::Syntax, "trailing tokens after triple", static_cast<int>(i + 1),
                  static_cast<int>(pos + 1));
    if (!s.is_resource() || !p.is_resource())
      throw Error(ErrorKind::Syntax, "subject and predicate must be IRIs", static_cast<int>(i + 1), 1);
    graph.insert(std::move(s), std::move(p), std::move(o));
  }
  return graph;
}

}  // namespace replan
