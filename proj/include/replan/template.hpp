#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replan/guideline.hpp"
#include "replan/pattern_query.hpp"
#include "replan/triple.hpp"

namespace replan {

struct TemplateProvenance {
  std::string workload_id;
  std::string query_id;
  std::string timestamp;
  bool operator==(const TemplateProvenance&) const = default;
};

// An abstracted problem pattern: canonical node labels (pops renumbered by
// depth-first traversal, tables/instances/columns/indexes replaced by
// T1/Q1/C1/I1 symbols), per-node property bounds, and the canonical
// remedy guideline. Bounds and the matching order of same-typed nodes are
// carried inside the pattern graph itself.
struct Template {
  std::string template_id;  // random 128-bit identifier in hex
  TripleGraph pattern_graph;
  GuidelineNode guideline;
  double improvement_ratio = 1.0;
  TemplateProvenance provenance;

  bool operator==(const Template&) const = default;
};

// Decoded view of one pattern node, for query generation and reporting.
struct TemplateNode {
  int label = 0;  // canonical pop label
  PopType type = PopType::TbScan;
  std::optional<std::string> instance_label;  // Qk for scan nodes
  std::optional<std::string> index_label;     // Ik for IXSCAN nodes
  std::optional<std::pair<double, double>> card_bounds;
  std::optional<std::pair<double, double>> row_bounds;
};

struct TemplateShape {
  std::vector<TemplateNode> nodes;                  // ascending label
  std::vector<std::pair<int, int>> edges;           // child -> parent (output stream)
  std::vector<std::pair<int, int>> distinct_pairs;  // (greater, lesser) match order
};

TemplateShape decode_template(const Template& tpl);

void validate_template(const Template& tpl);

// Identity under which knowledge-base merging coalesces templates:
// the pattern graph without bound triples, plus the guideline.
std::string template_structure_key(const Template& tpl);

// Coalesces two structurally identical templates: bounds widen to the
// union interval, the improvement ratio takes the maximum, and the smaller
// template id (with its provenance) survives.
Template merge_templates(const Template& a, const Template& b);

// Variable names used by compiled queries.
std::string template_node_var(const TemplateNode& node);

// Compiles the template into its matching query: one result-handler
// variable per node, an internal handler plus range filters per bounded
// numeric property, one output-stream relationship pattern per edge,
// instance/index reads for guideline substitution, and pairwise
// distinct-order filters over same-typed nodes.
PatternQuery compile_from_template(const Template& tpl);

std::string fresh_template_id();

}  // namespace replan
