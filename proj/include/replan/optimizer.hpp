#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replan/catalog.hpp"
#include "replan/cost_model.hpp"
#include "replan/guideline.hpp"
#include "replan/plan.hpp"
#include "replan/workload.hpp"

namespace replan {

struct IgnoredGuideline {
  int root_index = 0;  // position of the offending root element in the doc
  std::string reason;
  bool operator==(const IgnoredGuideline&) const = default;
};

struct OptimizerOptions {
  const GuidelineDoc* guidelines = nullptr;
  bool allow_cross_products = false;
};

struct PlannerResult {
  Plan plan;
  std::vector<IgnoredGuideline> ignored;
};

// Dynamic programming over connected table subsets: every bushy shape up
// to six tables, greedy component merging beyond. Guideline subtrees force
// the subproblem whose leaf instance set matches theirs; guidelines that
// reference absent instances, overlap an earlier one, or would need a
// cross product are skipped and reported.
PlannerResult optimize(const Query& query, const Catalog& catalog,
                       const OptimizerOptions& options = {});

// Uniformly samples a join-tree shape over the connected join graph, a
// join method per join, and an access path per table. Deterministic per
// seed; the result is always a valid plan.
Plan random_plan(const Query& query, const Catalog& catalog, std::uint64_t seed);

}  // namespace replan
