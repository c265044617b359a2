#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replan/knowledge_base.hpp"
#include "replan/learning.hpp"
#include "replan/scenario.hpp"

namespace replan {

struct LearningScalePoint {
  int threshold = 0;
  int queries = 0;
  int subqueries = 0;
  double total_ms = 0;
  double per_query_ms = 0;
  double per_subquery_ms = 0;
};

struct WorkloadScalePoint {
  int queries = 0;
  double total_ms = 0;
};

struct MatchLatencyPoint {
  int tables = 0;
  int templates = 0;
  double total_ms = 0;
  double per_rewrite_ms = 0;  // total / templates evaluated
};

struct RoutinizationPoint {
  int queries = 0;
  int templates = 0;
  double total_ms = 0;
};

// Learning time per query and sub-query as the join threshold grows.
std::vector<LearningScalePoint> bench_learning_threshold(const std::vector<int>& thresholds,
                                                         int queries, std::uint64_t seed);

// Learning time as the workload grows, threshold fixed at 4.
std::vector<WorkloadScalePoint> bench_workload_scale(const std::vector<int>& sizes,
                                                     std::uint64_t seed);

// Per-rewrite matching latency over chain plans of growing width.
std::vector<MatchLatencyPoint> bench_matching(const std::vector<int>& table_counts,
                                              int kb_templates, std::uint64_t seed);

// Total matching time over a (queries x templates) grid.
std::vector<RoutinizationPoint> bench_routinization(int queries,
                                                    const std::vector<int>& template_counts,
                                                    std::uint64_t seed);

// Synthetic knowledge base of n abstracted rewrites over chain queries.
KnowledgeBase synthetic_kb(int n_templates, std::uint64_t seed);

// Ordinary least squares R^2 of y against x.
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

std::string render_bench_tsv(const std::vector<LearningScalePoint>& rows);
std::string render_bench_tsv(const std::vector<WorkloadScalePoint>& rows);
std::string render_bench_tsv(const std::vector<MatchLatencyPoint>& rows);
std::string render_bench_tsv(const std::vector<RoutinizationPoint>& rows);

}  // namespace replan
