#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replan/catalog.hpp"
#include "replan/workload.hpp"

namespace replan {

// Self-contained misestimation scenarios used by the bundled scenario
// files, the benchmark harness, and the test suites. Each one plants a
// specific divergence between estimated and true selectivities that makes
// the optimizer's choice measurably wrong.
struct Scenario {
  std::string name;
  Catalog catalog;
  Workload workload;
};

// Merge join whose sort side explodes at runtime; a hash join with the
// build on the small table avoids the spill.
Scenario sort_spill_scenario();

// Nested-loop join driving an unclustered index fetch whose true join
// selectivity floods the buffer pool; a hash join scans once instead.
Scenario index_flood_scenario();

// Local predicates far more selective on paper than in the data, making
// index scans look cheap and table scans look expensive.
Scenario scan_inversion_scenario();

// Stale date-range statistics: the estimate keeps half the dimension
// rows, the data keeps almost none, so index-ordered access wins.
Scenario stale_range_scenario();

std::vector<Scenario> motif_scenarios();

// The three motifs that share cost parameters, in one catalog/workload.
Scenario combined_scenario();

// n_queries clones of the combined motifs under per-clone names; per-query
// learning work stays constant, so learning time should scale linearly.
Scenario scaled_scenario(int n_queries);

// Bijective renaming of every table, column, index, and instance name.
Scenario renamed_clone(const Scenario& base, const std::string& suffix);

// Linear chain query over `tables` cloned tables (used by matching
// latency measurements).
Scenario chain_scenario(int tables);

}  // namespace replan
