#include "replan/knowledge_base.hpp"

#include <algorithm>
#include <sstream>

#include "replan/codec.hpp"
#include "replan/error.hpp"
#include "replan/guideline.hpp"
#include "replan/util.hpp"

namespace replan {

namespace {

constexpr std::string_view kMetaSubject = "http://replan/kb/meta";
constexpr std::string_view kTemplatePrefix = "http://replan/kb/template/";

constexpr std::string_view kVersionProp = "hasVersion";
constexpr std::string_view kCreatedProp = "hasCreated";
constexpr std::string_view kProvenanceProp = "hasProvenance";
constexpr std::string_view kRatioProp = "hasImprovementRatio";
constexpr std::string_view kGuidelineProp = "hasGuidelineXml";
constexpr std::string_view kWorkloadProp = "hasWorkloadId";
constexpr std::string_view kQueryProp = "hasQueryId";
constexpr std::string_view kTimestampProp = "hasTimestamp";

std::string template_subject(const std::string& id) { return std::string(kTemplatePrefix) + id; }

// Moves a pattern-graph term between the plain pop namespace and the
// template-scoped one.
Term scope_term(const Term& term, const std::string& scope_prefix, bool into_scope) {
  if (!term.is_resource()) return term;
  if (into_scope) {
    auto id = iri::pop_id(term);
    if (!id) return term;
    return Term::resource(scope_prefix + "/pop/" + std::to_string(*id));
  }
  if (!starts_with(term.text, scope_prefix + "/pop/")) return term;
  return Term::resource(std::string(iri::kPopPrefix) + term.text.substr(scope_prefix.size() + 5));
}

}  // namespace

void add_template(KnowledgeBase& kb, Template tpl) {
  validate_template(tpl);
  std::string key = template_structure_key(tpl);
  for (auto& [id, resident] : kb.templates) {
    if (template_structure_key(resident) != key) continue;
    Template merged = merge_templates(resident, tpl);
    if (merged.template_id != id) {
      kb.templates.erase(id);
      kb.templates.emplace(merged.template_id, std::move(merged));
    } else {
      resident = std::move(merged);
    }
    return;
  }
  std::string id = tpl.template_id;
  kb.templates.emplace(std::move(id), std::move(tpl));
}

KnowledgeBase merge_kb(const KnowledgeBase& a, const KnowledgeBase& b) {
  KnowledgeBase merged = a;
  for (const auto& [id, tpl] : b.templates) add_template(merged, tpl);
  for (const auto& entry : b.meta.provenance)
    if (std::find(merged.meta.provenance.begin(), merged.meta.provenance.end(), entry) ==
        merged.meta.provenance.end())
      merged.meta.provenance.push_back(entry);
  if (merged.meta.created.empty()) merged.meta.created = b.meta.created;
  return merged;
}

std::string save_kb(const KnowledgeBase& kb) {
  TripleGraph graph;
  Term meta = Term::resource(std::string(kMetaSubject));
  graph.insert(meta, Term::resource(iri::prop(kVersionProp)),
               Term::num(static_cast<double>(kb.meta.version)));
  graph.insert(meta, Term::resource(iri::prop(kCreatedProp)), Term::string(kb.meta.created));
  for (const auto& entry : kb.meta.provenance)
    graph.insert(meta, Term::resource(iri::prop(kProvenanceProp)), Term::string(entry));

  for (const auto& [id, tpl] : kb.templates) {
    std::string scope = template_subject(id);
    Term subject = Term::resource(scope);
    graph.insert(subject, Term::resource(iri::prop(kRatioProp)), Term::num(tpl.improvement_ratio));
    graph.insert(subject, Term::resource(iri::prop(kGuidelineProp)),
                 Term::string(guideline_to_xml(GuidelineDoc{{tpl.guideline}})));
    graph.insert(subject, Term::resource(iri::prop(kWorkloadProp)),
                 Term::string(tpl.provenance.workload_id));
    graph.insert(subject, Term::resource(iri::prop(kQueryProp)), Term::string(tpl.provenance.query_id));
    graph.insert(subject, Term::resource(iri::prop(kTimestampProp)),
                 Term::string(tpl.provenance.timestamp));
    for (const Triple& t : tpl.pattern_graph.triples())
      graph.insert(scope_term(t.subject, scope, true), t.predicate, scope_term(t.object, scope, true));
  }
  return serialize_graph(graph);
}

KnowledgeBase load_kb(std::string_view text) {
  TripleGraph graph = parse_graph(text);
  KnowledgeBase kb;

  Term meta = Term::resource(std::string(kMetaSubject));
  auto version_triples = graph.match_basic(meta, Term::resource(iri::prop(kVersionProp)), std::nullopt);
  if (version_triples.empty() || !version_triples.front().object.is_number())
    throw Error(ErrorKind::Version, "knowledge base has no version triple");
  int version = static_cast<int>(version_triples.front().object.number);
  if (version != kKnowledgeBaseVersion)
    throw Error(ErrorKind::Version, "unsupported knowledge base version " + std::to_string(version));
  kb.meta.version = version;
  for (const Triple& t : graph.match_basic(meta, std::nullopt, std::nullopt)) {
    if (t.predicate.text == iri::prop(kCreatedProp)) kb.meta.created = t.object.text;
    if (t.predicate.text == iri::prop(kProvenanceProp)) kb.meta.provenance.push_back(t.object.text);
  }

  // Group template-scoped subjects.
  std::map<std::string, std::vector<Triple>> by_template;
  for (const Triple& t : graph.triples()) {
    if (!starts_with(t.subject.text, kTemplatePrefix)) continue;
    std::string rest = t.subject.text.substr(kTemplatePrefix.size());
    std::string id = rest.substr(0, rest.find('/'));
    by_template[id].push_back(t);
  }

  for (const auto& [id, triples] : by_template) {
    Template tpl;
    tpl.template_id = id;
    std::string scope = template_subject(id);
    std::string guideline_xml;
    for (const Triple& t : triples) {
      if (t.subject.text == scope) {
        const std::string& p = t.predicate.text;
        if (p == iri::prop(kRatioProp)) tpl.improvement_ratio = t.object.number;
        else if (p == iri::prop(kGuidelineProp)) guideline_xml = t.object.text;
        else if (p == iri::prop(kWorkloadProp)) tpl.provenance.workload_id = t.object.text;
        else if (p == iri::prop(kQueryProp)) tpl.provenance.query_id = t.object.text;
        else if (p == iri::prop(kTimestampProp)) tpl.provenance.timestamp = t.object.text;
        continue;
      }
      tpl.pattern_graph.insert(scope_term(t.subject, scope, false), t.predicate,
                               scope_term(t.object, scope, false));
    }
    if (guideline_xml.empty())
      throw Error(ErrorKind::Structure, "template " + id + " has no guideline");
    GuidelineDoc doc = parse_guideline_xml(guideline_xml);
    if (doc.roots.size() != 1)
      throw Error(ErrorKind::Structure, "template " + id + " must hold exactly one guideline tree");
    tpl.guideline = doc.roots.front();
    validate_template(tpl);
    kb.templates.emplace(id, std::move(tpl));
  }
  return kb;
}

void save_kb_file(const KnowledgeBase& kb, const std::string& path) {
  write_file_atomic(path, save_kb(kb));
}

KnowledgeBase load_kb_file(const std::string& path) { return load_kb(read_file(path)); }

std::string kb_stats(const KnowledgeBase& kb) {
  std::ostringstream out;
  out << "version\t" << kb.meta.version << "\n";
  out << "created\t" << kb.meta.created << "\n";
  out << "templates\t" << kb.templates.size() << "\n";
  out << "template_id\tjoins\tnodes\timprovement\tworkload\tquery\n";
  for (const auto& [id, tpl] : kb.templates) {
    TemplateShape shape = decode_template(tpl);
    int joins = 0;
    for (const auto& node : shape.nodes)
      if (is_join(node.type)) ++joins;
    out << id << "\t" << joins << "\t" << shape.nodes.size() << "\t"
        << format_number(tpl.improvement_ratio) << "\t" << tpl.provenance.workload_id << "\t"
        << tpl.provenance.query_id << "\n";
  }
  return out.str();
}

}  // namespace replan
