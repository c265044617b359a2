#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "replan/knowledge_base.hpp"
#include "replan/optimizer.hpp"
#include "replan/pattern_query.hpp"
#include "replan/plan.hpp"
#include "replan/workload.hpp"

namespace replan {

struct Match {
  std::string template_id;
  Binding binding;               // canonical label vars -> concrete resources
  std::set<int> covered_pops;
  double expected_improvement = 1.0;

  bool operator==(const Match&) const = default;
};

// Climbs the plan's segments bottom-up, evaluating every template's
// compiled query against each segment graph. Identical (template,
// covered pops) pairs are reported once; order is deterministic.
std::vector<Match> match_plan(const Plan& plan, const KnowledgeBase& kb, int max_joins);

// Greedy selection by descending expected improvement (ties: fewer covered
// pops, then template id); a match is kept only if pop-disjoint from all
// previously kept matches.
std::vector<Match> select_matches(const std::vector<Match>& matches);

// Instantiates each kept template's guideline: bound table instances fill
// TABID attributes, bound index names fill INDEX. Roots appear in
// selection order under one OPTGUIDELINES document.
GuidelineDoc build_guidelines(const std::vector<Match>& kept, const KnowledgeBase& kb,
                              const Plan& plan);

struct ReoptConfig {
  int max_joins = 4;
  bool verify = false;  // re-run both plans and fall back when slower
  std::uint64_t seed = 0;
  bool explain = false;
};

struct ReoptReport {
  std::string query_id;
  std::vector<Match> applied;
  std::vector<Match> dropped;  // matched but withdrawn by verification
  std::vector<IgnoredGuideline> ignored;
  double original_cost = 0;
  double reopt_cost = 0;
  std::optional<double> original_elapsed;
  std::optional<double> reopt_elapsed;
  bool fell_back = false;
  std::vector<std::string> explanations;  // compiled-query text per applied match
};

struct ReoptResult {
  Plan plan;
  GuidelineDoc guidelines;
  ReoptReport report;
};

// optimize -> match -> select -> build guidelines -> optimize again.
// In verification mode both plans are executed; if the re-optimized plan
// is slower the original is kept and the matches are reported as dropped.
ReoptResult reoptimize(const Query& query, const Catalog& catalog, const KnowledgeBase& kb,
                       const ReoptConfig& config = {});

// Per-query reoptimization over a whole workload. Queries are independent,
// so they may run concurrently; results keep workload order either way.
std::vector<ReoptResult> reoptimize_workload(const Workload& workload, const Catalog& catalog,
                                             const KnowledgeBase& kb, const ReoptConfig& config = {},
                                             int workers = 1);

// Text table over a whole workload: query id, matched templates, estimated
// cost before/after, elapsed before/after when verifying.
std::string render_workload_report(const std::vector<ReoptResult>& results, bool verified);

}  // namespace replan
