#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "replan/catalog.hpp"
#include "replan/cost_model.hpp"
#include "replan/optimizer.hpp"
#include "replan/template.hpp"
#include "replan/workload.hpp"

namespace replan {

// A connected slice of a parent query: the chosen table subset plus every
// join and local predicate fully contained in it.
struct SubQuery {
  std::string parent_query_id;
  Query query;

  bool operator==(const SubQuery&) const = default;
};

// Property key for learned bounds: (problem-plan pop id, property name).
using BoundKey = std::pair<int, std::string>;
inline constexpr const char* kBoundCardinality = "cardinality";
inline constexpr const char* kBoundRowSize = "row_size";

// A discovered (problem plan, solution plan) pair with its measured
// improvement and the per-node estimate ranges it generalizes over.
struct Rewrite {
  Plan problem_plan;
  Plan solution_plan;
  double improvement_ratio = 1.0;  // problem / solution, medians
  std::map<BoundKey, std::pair<double, double>> bounds;
  std::string workload_id;
  std::string query_id;
  int variant_count = 0;  // stats context: variants the interval spans
};

struct LearnConfig {
  int max_joins = 4;
  int k_variants = 5;
  int n_random = 20;
  int run_count = 5;
  double min_improvement = 1.10;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string workload_id = "workload";
  std::string timestamp = "1970-01-01T00:00:00Z";
};

// All connected table subsets with at most max_joins induced join
// predicates (and at least one), with their induced predicates.
// Deterministic order: by subset size, then instance names.
std::vector<SubQuery> segment_query(const Query& query, int max_joins);

// Optimal 1-D 2-means split of elapsed times: the contiguous split (in
// sorted order) minimizing within-cluster SSE. The cluster with the
// smaller mean is prospective; if the two means differ by less than 10%
// relative, every run is prospective. Returns original indexes.
std::pair<std::vector<int>, std::vector<int>> kmeans_filter(const std::vector<double>& elapsed);

// Score used by ranking: median prospective elapsed.
double prospective_score(const std::vector<double>& elapsed);

struct RankedCandidate {
  Plan plan;
  std::vector<RuntimeStats> runs;
};

// Index of the winning candidate: minimum prospective-median elapsed,
// ties within 1% broken by (logical, physical, cpu, sort-heap) medians,
// then by plan serialization.
size_t rank(const std::vector<RankedCandidate>& candidates);

// Benchmarks the optimizer's plan against random alternatives across the
// sub-query's predicate ranges. One rewrite per maximal contiguous variant
// interval over which a fixed alternative structure beats the baseline by
// at least min_improvement.
std::vector<Rewrite> discover(const SubQuery& subquery, const Catalog& catalog,
                              const LearnConfig& config);

// Canonicalization into a knowledge-base template: pops renumbered by
// depth-first traversal (outer before inner, RETURN dropped), names
// replaced by T/Q/C/I symbols, bounds and same-type match order attached
// to the pattern graph, guideline relabeled identically.
Template abstract_rewrite(const Rewrite& rewrite);

struct LearnReportRow {
  std::string template_id;
  double improvement_ratio = 1.0;
  std::string query_id;
  std::string subquery;  // instance list
  int variant_count = 0;
};

struct LearnOutcome {
  std::vector<Template> templates;
  std::vector<LearnReportRow> rows;
  int queries_analyzed = 0;
  int subqueries_analyzed = 0;
};

// Segment every query, deduplicate structurally identical sub-queries,
// discover rewrites (concurrently under config.workers), and abstract
// them. Deterministic modulo template ids for fixed inputs and seed.
LearnOutcome learn_workload(const Workload& workload, const Catalog& catalog,
                            const LearnConfig& config);

}  // namespace replan
