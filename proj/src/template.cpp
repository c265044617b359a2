#include "replan/template.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "replan/codec.hpp"
#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

namespace {

std::optional<double> number_property(const TripleGraph& graph, const Term& subject,
                                      std::string_view property) {
  auto triples = graph.match_basic(subject, Term::resource(iri::prop(property)), std::nullopt);
  if (triples.empty()) return std::nullopt;
  if (!triples.front().object.is_number()) return std::nullopt;
  return triples.front().object.number;
}

std::optional<std::string> string_property(const TripleGraph& graph, const Term& subject,
                                           std::string_view property) {
  auto triples = graph.match_basic(subject, Term::resource(iri::prop(property)), std::nullopt);
  if (triples.empty()) return std::nullopt;
  if (!triples.front().object.is_string()) return std::nullopt;
  return triples.front().object.text;
}

}  // namespace

TemplateShape decode_template(const Template& tpl) {
  TemplateShape shape;
  const TripleGraph& graph = tpl.pattern_graph;

  for (const Term& subject : graph.subjects()) {
    auto label = iri::pop_id(subject);
    if (!label) throw Error(ErrorKind::Structure, "template subject is not a pop: " + subject.text);
    TemplateNode node;
    node.label = *label;
    auto type_name = string_property(graph, subject, prop::kPopType);
    auto type = type_name ? pop_type_from_string(*type_name) : std::nullopt;
    if (!type)
      throw Error(ErrorKind::MissingProperty, "template node " + subject.text + " lacks a pop type");
    node.type = *type;
    node.instance_label = string_property(graph, subject, prop::kTableInstance);
    node.index_label = string_property(graph, subject, prop::kIndexName);
    auto card_lo = number_property(graph, subject, prop::kLowerCardinality);
    auto card_hi = number_property(graph, subject, prop::kHigherCardinality);
    if (card_lo && card_hi) node.card_bounds = {*card_lo, *card_hi};
    auto row_lo = number_property(graph, subject, prop::kLowerRowSize);
    auto row_hi = number_property(graph, subject, prop::kHigherRowSize);
    if (row_lo && row_hi) node.row_bounds = {*row_lo, *row_hi};
    shape.nodes.push_back(std::move(node));
  }
  std::sort(shape.nodes.begin(), shape.nodes.end(),
            [](const TemplateNode& a, const TemplateNode& b) { return a.label < b.label; });

  for (const Triple& t :
       graph.match_basic(std::nullopt, Term::resource(iri::prop(prop::kOutputStream)), std::nullopt)) {
    auto child = iri::pop_id(t.subject);
    auto parent = iri::pop_id(t.object);
    if (!child || !parent) throw Error(ErrorKind::Structure, "template edge between non-pop terms");
    shape.edges.emplace_back(*child, *parent);
  }
  std::sort(shape.edges.begin(), shape.edges.end());

  for (const Triple& t :
       graph.match_basic(std::nullopt, Term::resource(iri::prop(prop::kDistinctAfter)), std::nullopt)) {
    auto greater = iri::pop_id(t.subject);
    auto lesser = iri::pop_id(t.object);
    if (!greater || !lesser) throw Error(ErrorKind::Structure, "distinct-order pair between non-pop terms");
    shape.distinct_pairs.emplace_back(*greater, *lesser);
  }
  std::sort(shape.distinct_pairs.begin(), shape.distinct_pairs.end());
  return shape;
}

void validate_template(const Template& tpl) {
  if (tpl.template_id.empty()) throw Error(ErrorKind::Structure, "template without identifier");
  if (tpl.improvement_ratio <= 1.0)
    throw Error(ErrorKind::Structure, "template " + tpl.template_id + " has improvement ratio <= 1");
  TemplateShape shape = decode_template(tpl);
  if (shape.nodes.empty())
    throw Error(ErrorKind::Structure, "template " + tpl.template_id + " has an empty pattern");
  validate_guideline(tpl.guideline);

  std::set<std::string> pattern_instances;
  for (const TemplateNode& node : shape.nodes) {
    if (is_scan(node.type) && !node.instance_label)
      throw Error(ErrorKind::Structure, "template scan node lacks an instance label");
    if (node.instance_label) pattern_instances.insert(*node.instance_label);
    if (!node.card_bounds)
      throw Error(ErrorKind::Structure, "template node lacks cardinality bounds");
    if (node.card_bounds->first > node.card_bounds->second)
      throw Error(ErrorKind::Structure, "template cardinality bounds are inverted");
  }

  std::function<void(const GuidelineNode&)> check_leaves = [&](const GuidelineNode& node) {
    if (!node.is_join_tag()) {
      if (!node.tabid || !pattern_instances.count(*node.tabid))
        throw Error(ErrorKind::Structure,
                    "guideline leaf labels must be instance labels of the pattern");
    }
    for (const auto& child : node.children) check_leaves(child);
  };
  check_leaves(tpl.guideline);
}

std::string template_structure_key(const Template& tpl) {
  TripleGraph stripped;
  for (const Triple& t : tpl.pattern_graph.triples()) {
    const std::string& p = t.predicate.text;
    if (p == iri::prop(prop::kLowerCardinality) || p == iri::prop(prop::kHigherCardinality) ||
        p == iri::prop(prop::kLowerRowSize) || p == iri::prop(prop::kHigherRowSize))
      continue;
    stripped.insert(t);
  }
  return serialize_graph(stripped) + "--\n" + guideline_to_xml(GuidelineDoc{{tpl.guideline}});
}

Template merge_templates(const Template& a, const Template& b) {
  if (template_structure_key(a) != template_structure_key(b))
    throw Error(ErrorKind::Internal, "merging structurally different templates");
  const Template& keeper = a.template_id <= b.template_id ? a : b;
  const Template& other = a.template_id <= b.template_id ? b : a;

  TemplateShape keep_shape = decode_template(keeper);
  TemplateShape other_shape = decode_template(other);

  Template merged = keeper;
  merged.improvement_ratio = std::max(a.improvement_ratio, b.improvement_ratio);

  TripleGraph graph;
  for (const Triple& t : keeper.pattern_graph.triples()) {
    const std::string& p = t.predicate.text;
    if (p == iri::prop(prop::kLowerCardinality) || p == iri::prop(prop::kHigherCardinality) ||
        p == iri::prop(prop::kLowerRowSize) || p == iri::prop(prop::kHigherRowSize))
      continue;
    graph.insert(t);
  }
  for (size_t i = 0; i < keep_shape.nodes.size(); ++i) {
    const TemplateNode& ka = keep_shape.nodes[i];
    const TemplateNode& kb = other_shape.nodes[i];
    Term subject = Term::resource(iri::pop(ka.label));
    if (ka.card_bounds && kb.card_bounds) {
      graph.insert(subject, Term::resource(iri::prop(prop::kLowerCardinality)),
                   Term::num(std::min(ka.card_bounds->first, kb.card_bounds->first)));
      graph.insert(subject, Term::resource(iri::prop(prop::kHigherCardinality)),
                   Term::num(std::max(ka.card_bounds->second, kb.card_bounds->second)));
    } else if (ka.card_bounds) {
      graph.insert(subject, Term::resource(iri::prop(prop::kLowerCardinality)),
                   Term::num(ka.card_bounds->first));
      graph.insert(subject, Term::resource(iri::prop(prop::kHigherCardinality)),
                   Term::num(ka.card_bounds->second));
    }
    if (ka.row_bounds && kb.row_bounds) {
      graph.insert(subject, Term::resource(iri::prop(prop::kLowerRowSize)),
                   Term::num(std::min(ka.row_bounds->first, kb.row_bounds->first)));
      graph.insert(subject, Term::resource(iri::prop(prop::kHigherRowSize)),
                   Term::num(std::max(ka.row_bounds->second, kb.row_bounds->second)));
    } else if (ka.row_bounds) {
      graph.insert(subject, Term::resource(iri::prop(prop::kLowerRowSize)),
                   Term::num(ka.row_bounds->first));
      graph.insert(subject, Term::resource(iri::prop(prop::kHigherRowSize)),
                   Term::num(ka.row_bounds->second));
    }
  }
  merged.pattern_graph = std::move(graph);
  return merged;
}

std::string template_node_var(const TemplateNode& node) {
  if (node.instance_label) return "pop_" + *node.instance_label;
  return "pop_" + std::to_string(node.label);
}

PatternQuery compile_from_template(const Template& tpl) {
  TemplateShape shape = decode_template(tpl);
  PatternQuery query;

  std::map<int, std::string> var_of;
  for (const TemplateNode& node : shape.nodes) var_of[node.label] = template_node_var(node);

  int next_handler = 1;
  std::vector<std::string> value_vars;
  for (const TemplateNode& node : shape.nodes) {
    const std::string& var = var_of[node.label];
    query.select_vars.push_back(var);
    query.patterns.push_back(TriplePattern{
        TermOrVar::variable(var), Term::resource(iri::prop(prop::kPopType)),
        TermOrVar::constant(Term::string(std::string(to_string(node.type))))});

    if (node.card_bounds) {
      std::string handler = "ih" + std::to_string(next_handler++);
      query.patterns.push_back(TriplePattern{TermOrVar::variable(var),
                                             Term::resource(iri::prop(prop::kEstimateCardinality)),
                                             TermOrVar::variable(handler)});
      query.filters.push_back(NumericFilter{handler, CmpOp::Ge, node.card_bounds->first});
      query.filters.push_back(NumericFilter{handler, CmpOp::Le, node.card_bounds->second});
    }
    if (node.row_bounds) {
      std::string handler = "ih" + std::to_string(next_handler++);
      query.patterns.push_back(TriplePattern{TermOrVar::variable(var),
                                             Term::resource(iri::prop(prop::kRowSize)),
                                             TermOrVar::variable(handler)});
      query.filters.push_back(NumericFilter{handler, CmpOp::Ge, node.row_bounds->first});
      query.filters.push_back(NumericFilter{handler, CmpOp::Le, node.row_bounds->second});
    }
    if (node.instance_label) {
      std::string inst_var = "inst_" + *node.instance_label;
      query.patterns.push_back(TriplePattern{TermOrVar::variable(var),
                                             Term::resource(iri::prop(prop::kTableInstance)),
                                             TermOrVar::variable(inst_var)});
      value_vars.push_back(inst_var);
    }
    if (node.type == PopType::IxScan && node.index_label) {
      std::string idx_var = "idx_" + *node.index_label;
      query.patterns.push_back(TriplePattern{TermOrVar::variable(var),
                                             Term::resource(iri::prop(prop::kIndexName)),
                                             TermOrVar::variable(idx_var)});
      value_vars.push_back(idx_var);
    }
  }

  for (const auto& [child, parent] : shape.edges)
    query.patterns.push_back(TriplePattern{TermOrVar::variable(var_of.at(child)),
                                           Term::resource(iri::prop(prop::kOutputStream)),
                                           TermOrVar::variable(var_of.at(parent))});

  for (const auto& [greater, lesser] : shape.distinct_pairs)
    query.filters.push_back(DistinctOrderFilter{var_of.at(greater), var_of.at(lesser)});

  for (const auto& v : value_vars) query.select_vars.push_back(v);
  return query;
}

std::string fresh_template_id() {
  static std::random_device entropy;
  std::ostringstream out;
  for (int i = 0; i < 2; ++i) {
    std::uint64_t word = (static_cast<std::uint64_t>(entropy()) << 32) ^ entropy();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(word));
    out << buf;
  }
  return out.str();
}

}  // namespace replan
