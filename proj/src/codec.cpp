#include "replan/codec.hpp"

#include <algorithm>
#include <set>

#include "replan/error.hpp"

namespace replan {

namespace {

void emit_pop(TripleGraph& graph, const Plan& plan, const Lolepop& pop,
              const std::set<int>* segment) {
  Term subject = Term::resource(iri::pop(pop.id));
  graph.insert(subject, Term::resource(iri::prop(prop::kPopType)), Term::string(std::string(to_string(pop.pop_type))));
  graph.insert(subject, Term::resource(iri::prop(prop::kEstimateCardinality)), Term::num(pop.est_cardinality));
  graph.insert(subject, Term::resource(iri::prop(prop::kRowSize)), Term::num(static_cast<double>(pop.est_row_size)));
  graph.insert(subject, Term::resource(iri::prop(prop::kCost)), Term::num(pop.est_cost));
  if (pop.table_ref) {
    graph.insert(subject, Term::resource(iri::prop(prop::kTableName)), Term::string(pop.table_ref->table_name));
    graph.insert(subject, Term::resource(iri::prop(prop::kTableInstance)), Term::string(pop.table_ref->instance));
  }
  if (pop.index_name)
    graph.insert(subject, Term::resource(iri::prop(prop::kIndexName)), Term::string(*pop.index_name));

  for (size_t slot = 0; slot < pop.inputs.size(); ++slot) {
    int child = pop.inputs[slot];
    if (segment && !segment->count(child)) continue;
    Term child_term = Term::resource(iri::pop(child));
    std::string_view edge = slot == 0 ? prop::kOuterInputStream : prop::kInnerInputStream;
    graph.insert(subject, Term::resource(iri::prop(edge)), child_term);
    graph.insert(child_term, Term::resource(iri::prop(prop::kOutputStream)), subject);
  }
  (void)plan;
}

}  // namespace

TripleGraph plan_to_graph(const Plan& plan) {
  TripleGraph graph;
  for (const auto& [id, pop] : plan.pops) emit_pop(graph, plan, pop, nullptr);
  return graph;
}

TripleGraph subplan_to_graph(const Plan& plan, const SubPlan& sub) {
  TripleGraph graph;
  std::set<int> segment(sub.pop_ids.begin(), sub.pop_ids.end());
  for (int id : sub.pop_ids) emit_pop(graph, plan, plan.pop(id), &segment);
  return graph;
}

namespace {

const Term& require_object(const Term& subject, std::string_view property,
                           const std::vector<Triple>& cache) {
  for (const Triple& t : cache)
    if (t.predicate.text == iri::prop(property)) return t.object;
  throw Error(ErrorKind::MissingProperty,
              "subject <" + subject.text + "> is missing " + std::string(property));
}

}  // namespace

Plan graph_to_plan(const TripleGraph& graph) {
  Plan plan;

  // Collect pop subjects.
  std::vector<std::pair<int, Term>> subjects;
  for (const Term& subject : graph.subjects()) {
    auto id = iri::pop_id(subject);
    if (id) subjects.emplace_back(*id, subject);
  }
  if (subjects.empty()) throw Error(ErrorKind::Structure, "graph holds no pop subjects");

  for (const auto& [id, subject] : subjects) {
    auto cache = graph.match_basic(subject, std::nullopt, std::nullopt);
    Lolepop pop;
    pop.id = id;

    const Term& type_term = require_object(subject, prop::kPopType, cache);
    auto type = type_term.is_string() ? pop_type_from_string(type_term.text) : std::nullopt;
    if (!type)
      throw Error(ErrorKind::Structure, "subject <" + subject.text + "> has invalid pop type");
    pop.pop_type = *type;

    const Term& card = require_object(subject, prop::kEstimateCardinality, cache);
    const Term& rowsz = require_object(subject, prop::kRowSize, cache);
    const Term& cost = require_object(subject, prop::kCost, cache);
    if (!card.is_number() || !rowsz.is_number() || !cost.is_number())
      throw Error(ErrorKind::Structure, "subject <" + subject.text + "> has non-numeric estimates");
    pop.est_cardinality = card.number;
    pop.est_row_size = static_cast<long long>(rowsz.number);
    pop.est_cost = cost.number;

    if (is_scan(pop.pop_type)) {
      const Term& table = require_object(subject, prop::kTableName, cache);
      const Term& instance = require_object(subject, prop::kTableInstance, cache);
      pop.table_ref = TableRef{table.text, instance.text};
    }
    if (pop.pop_type == PopType::IxScan)
      pop.index_name = require_object(subject, prop::kIndexName, cache).text;

    // Input edges, outer slot before inner.
    for (std::string_view edge : {prop::kOuterInputStream, prop::kInnerInputStream}) {
      for (const Triple& t :
           graph.match_basic(subject, Term::resource(iri::prop(edge)), std::nullopt)) {
        auto child = iri::pop_id(t.object);
        if (!child)
          throw Error(ErrorKind::DanglingEdge, "edge from <" + subject.text + "> to foreign object");
        pop.inputs.push_back(*child);
      }
    }

    plan.pops.emplace(id, std::move(pop));
  }

  // Dangling edges: inputs that name subjects with no description.
  for (const auto& [id, pop] : plan.pops)
    for (int child : pop.inputs)
      if (!plan.has_pop(child))
        throw Error(ErrorKind::DanglingEdge, "pop " + std::to_string(id) + " points at undescribed pop " +
                                                 std::to_string(child));

  int root = -1;
  for (const auto& [id, pop] : plan.pops)
    if (pop.pop_type == PopType::Return) root = id;
  if (root < 0) throw Error(ErrorKind::Structure, "graph holds no RETURN pop");
  plan.root = root;

  validate_plan(plan);
  return plan;
}

}  // namespace replan
