#include "replan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "replan/error.hpp"
#include "replan/matching.hpp"
#include "replan/optimizer.hpp"
#include "replan/util.hpp"

namespace replan {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

LearnConfig bench_learn_config(std::uint64_t seed) {
  LearnConfig config;
  config.seed = seed;
  config.k_variants = 3;
  config.n_random = 8;
  config.run_count = 3;
  config.workload_id = "bench";
  return config;
}

}  // namespace

std::vector<LearningScalePoint> bench_learning_threshold(const std::vector<int>& thresholds,
                                                         int queries, std::uint64_t seed) {
  std::vector<LearningScalePoint> rows;
  Scenario scenario = scaled_scenario(queries);
  for (int threshold : thresholds) {
    LearnConfig config = bench_learn_config(seed);
    config.max_joins = threshold;
    double start = now_ms();
    LearnOutcome outcome = learn_workload(scenario.workload, scenario.catalog, config);
    double elapsed = now_ms() - start;
    LearningScalePoint row;
    row.threshold = threshold;
    row.queries = outcome.queries_analyzed;
    row.subqueries = outcome.subqueries_analyzed;
    row.total_ms = elapsed;
    row.per_query_ms = elapsed / std::max(1, outcome.queries_analyzed);
    row.per_subquery_ms = elapsed / std::max(1, outcome.subqueries_analyzed);
    rows.push_back(row);
  }
  return rows;
}

std::vector<WorkloadScalePoint> bench_workload_scale(const std::vector<int>& sizes,
                                                     std::uint64_t seed) {
  std::vector<WorkloadScalePoint> rows;
  for (int size : sizes) {
    Scenario scenario = scaled_scenario(size);
    LearnConfig config = bench_learn_config(seed);
    double start = now_ms();
    learn_workload(scenario.workload, scenario.catalog, config);
    double elapsed = now_ms() - start;
    rows.push_back(WorkloadScalePoint{size, elapsed});
  }
  return rows;
}

KnowledgeBase synthetic_kb(int n_templates, std::uint64_t seed) {
  KnowledgeBase kb;
  kb.meta.created = "synthetic";
  Scenario chain = chain_scenario(5);
  const Query& query = chain.workload.queries.front();

  std::set<std::string> seen_keys;
  int made = 0;
  for (int i = 0; made < n_templates; ++i) {
    if (i > n_templates * 20 + 100)
      throw Error(ErrorKind::Internal, "synthetic template generation stalled");
    // Sub-chain of 2..4 tables.
    int width = 2 + (i % 3);
    int start = i % (static_cast<int>(query.tables.size()) - width + 1);
    SubQuery sub;
    sub.parent_query_id = query.id;
    for (int t = start; t < start + width; ++t) sub.query.tables.push_back(query.tables[t]);
    sub.query.id = query.id + "#bench" + std::to_string(i);
    for (const auto& join : query.join_preds)
      if (sub.query.has_instance(join.left.instance) && sub.query.has_instance(join.right.instance))
        sub.query.join_preds.push_back(join);
    for (const auto& pred : query.local_preds)
      if (sub.query.has_instance(pred.column.instance)) sub.query.local_preds.push_back(pred);

    Rewrite rewrite;
    rewrite.problem_plan = random_plan(sub.query, chain.catalog, mix_seed(seed, i * 2));
    rewrite.solution_plan = random_plan(sub.query, chain.catalog, mix_seed(seed, i * 2 + 1));
    if (structure_signature(rewrite.problem_plan, true) ==
        structure_signature(rewrite.solution_plan, true))
      continue;
    rewrite.improvement_ratio = 1.1 + static_cast<double>(i % 50) / 25.0;
    rewrite.workload_id = "bench";
    rewrite.query_id = sub.query.id;
    // Wide bounds so the shape, not the estimates, drives matching.
    CostBreakdown breakdown = estimate(rewrite.problem_plan, sub.query, chain.catalog);
    for (const auto& [id, est] : breakdown.per_pop) {
      rewrite.bounds[{id, kBoundCardinality}] = {0.0, 1e15};
      rewrite.bounds[{id, kBoundRowSize}] = {0.0, 1e9};
    }
    Template tpl = abstract_rewrite(rewrite);
    tpl.provenance.timestamp = "bench";
    // Direct keyed insertion; coalescing through add_template would make
    // building a 1000-template base quadratic in key serializations.
    std::string key = template_structure_key(tpl);
    if (!seen_keys.insert(key).second) continue;
    kb.templates.emplace(tpl.template_id, std::move(tpl));
    made = static_cast<int>(kb.templates.size());
  }
  return kb;
}

std::vector<MatchLatencyPoint> bench_matching(const std::vector<int>& table_counts,
                                              int kb_templates, std::uint64_t seed) {
  KnowledgeBase kb = synthetic_kb(kb_templates, seed);
  std::vector<MatchLatencyPoint> rows;
  for (int tables : table_counts) {
    Scenario scenario = chain_scenario(tables);
    Plan plan = optimize(scenario.workload.queries.front(), scenario.catalog).plan;
    // Warm-up plus three timed repetitions; keep the median.
    match_plan(plan, kb, 4);
    std::vector<double> samples;
    for (int rep = 0; rep < 3; ++rep) {
      double start = now_ms();
      match_plan(plan, kb, 4);
      samples.push_back(now_ms() - start);
    }
    std::sort(samples.begin(), samples.end());
    MatchLatencyPoint row;
    row.tables = tables;
    row.templates = static_cast<int>(kb.templates.size());
    row.total_ms = samples[1];
    row.per_rewrite_ms = samples[1] / std::max<size_t>(1, kb.templates.size());
    rows.push_back(row);
  }
  return rows;
}

std::vector<RoutinizationPoint> bench_routinization(int queries,
                                                    const std::vector<int>& template_counts,
                                                    std::uint64_t seed) {
  int max_templates = 0;
  for (int count : template_counts) max_templates = std::max(max_templates, count);
  KnowledgeBase full = synthetic_kb(max_templates, seed);

  // Plans for the query grid: chain queries of rotating widths.
  std::vector<Plan> plans;
  for (int i = 0; i < queries; ++i) {
    Scenario scenario = chain_scenario(3 + i % 6);
    plans.push_back(optimize(scenario.workload.queries.front(), scenario.catalog).plan);
  }

  std::vector<RoutinizationPoint> rows;
  for (int count : template_counts) {
    KnowledgeBase kb;
    kb.meta.created = full.meta.created;
    for (const auto& [id, tpl] : full.templates) {
      if (static_cast<int>(kb.templates.size()) >= count) break;
      kb.templates.emplace(id, tpl);
    }
    double start = now_ms();
    for (const Plan& plan : plans) match_plan(plan, kb, 4);
    rows.push_back(RoutinizationPoint{queries, static_cast<int>(kb.templates.size()),
                                      now_ms() - start});
  }
  return rows;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorKind::Range, "linear fit needs matching samples");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) return 0;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    double fit = slope * x[i] + intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0) return 1.0;
  return 1.0 - ss_res / ss_tot;
}

std::string render_bench_tsv(const std::vector<LearningScalePoint>& rows) {
  std::ostringstream out;
  out << "threshold\tqueries\tsubqueries\ttotal_ms\tper_query_ms\tper_subquery_ms\n";
  for (const auto& r : rows)
    out << r.threshold << "\t" << r.queries << "\t" << r.subqueries << "\t"
        << format_number(r.total_ms) << "\t" << format_number(r.per_query_ms) << "\t"
        << format_number(r.per_subquery_ms) << "\n";
  return out.str();
}

std::string render_bench_tsv(const std::vector<WorkloadScalePoint>& rows) {
  std::ostringstream out;
  out << "queries\ttotal_ms\n";
  for (const auto& r : rows) out << r.queries << "\t" << format_number(r.total_ms) << "\n";
  return out.str();
}

std::string render_bench_tsv(const std::vector<MatchLatencyPoint>& rows) {
  std::ostringstream out;
  out << "tables\ttemplates\ttotal_ms\tper_rewrite_ms\n";
  for (const auto& r : rows)
    out << r.tables << "\t" << r.templates << "\t" << format_number(r.total_ms) << "\t"
        << format_number(r.per_rewrite_ms) << "\n";
  return out.str();
}

std::string render_bench_tsv(const std::vector<RoutinizationPoint>& rows) {
  std::ostringstream out;
  out << "queries\ttemplates\ttotal_ms\n";
  for (const auto& r : rows)
    out << r.queries << "\t" << r.templates << "\t" << format_number(r.total_ms) << "\n";
  return out.str();
}

}  // namespace replan
