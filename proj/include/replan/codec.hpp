#pragma once

#include "replan/plan.hpp"
#include "replan/triple.hpp"

namespace replan {

// Property names used by the plan/graph codec and by compiled pattern
// queries. Kept in one place so the vocabulary stays closed.
namespace prop {
inline constexpr std::string_view kPopType = "hasPopType";
inline constexpr std::string_view kEstimateCardinality = "hasEstimateCardinality";
inline constexpr std::string_view kRowSize = "hasRowSize";
inline constexpr std::string_view kCost = "hasCost";
inline constexpr std::string_view kOuterInputStream = "hasOuterInputStream";
inline constexpr std::string_view kInnerInputStream = "hasInnerInputStream";
inline constexpr std::string_view kOutputStream = "hasOutputStream";
inline constexpr std::string_view kTableName = "hasTableName";
inline constexpr std::string_view kTableInstance = "hasTableInstance";
inline constexpr std::string_view kIndexName = "hasIndexName";
// Template-only vocabulary.
inline constexpr std::string_view kLowerCardinality = "hasLowerCardinality";
inline constexpr std::string_view kHigherCardinality = "hasHigherCardinality";
inline constexpr std::string_view kLowerRowSize = "hasLowerRowSize";
inline constexpr std::string_view kHigherRowSize = "hasHigherRowSize";
inline constexpr std::string_view kDistinctAfter = "hasDistinctAfter";
}  // namespace prop

// Emits, per pop: hasPopType, hasEstimateCardinality, hasRowSize, hasCost;
// parent->child hasOuterInputStream / hasInnerInputStream edges plus the
// inverse child->parent hasOutputStream edge; table and index properties
// on scan pops.
TripleGraph plan_to_graph(const Plan& plan);

// Same encoding restricted to the pops of one segment. Edges touching pops
// outside the segment are omitted.
TripleGraph subplan_to_graph(const Plan& plan, const SubPlan& sub);

// Inverse of plan_to_graph. Throws MissingProperty / DanglingEdge errors
// naming the offending subject.
Plan graph_to_plan(const TripleGraph& graph);

}  // namespace replan
