#pragma once

#include <cstdint>
#include <map>

#include "replan/catalog.hpp"
#include "replan/plan.hpp"
#include "replan/workload.hpp"

namespace replan {

struct PopEstimate {
  double cardinality = 0;
  long long row_size = 0;
  double cost = 0;  // cumulative cost of the subtree rooted here
};

struct CostBreakdown {
  double total = 0;
  std::map<int, PopEstimate> per_pop;
};

// Observed execution metrics from one simulated run.
struct RuntimeStats {
  double elapsed = 0;  // ms-scale units; equals model cost when sigma is 0
  long long logical_reads = 0;
  long long physical_reads = 0;
  double cpu_time = 0;
  long long sort_heap_hwm = 0;  // pages
};

// Bottom-up cost model over estimated selectivities:
//   TBSCAN  pages(T)
//   IXSCAN  3 + sel * pages(T) * (clustered ? 1 : random_io_penalty)
//   FETCH   child + fetched_rows * random_io_penalty / pages_factor,
//           pages_factor = rows_per_page for a clustered index, else 1
//   NLJOIN  outer + card(outer) * probe(inner); the probe reprices an
//           index access on the join column by the join selectivity
//   HSJOIN  outer + inner + 1.2 * (card_o + card_i) * cpu_row_cost
//           + spill_multiplier * pages beyond the sort heap (inner build)
//   MSJOIN  inputs + (card_o + card_i) * cpu_row_cost merge; an unsorted
//           input additionally pays n log2 n * cpu_row_cost inline
//   SORT    child + n log2 n * cpu_row_cost + spill term
// Cardinalities propagate multiplicatively through selectivities.
CostBreakdown estimate(const Plan& plan, const Query& query, const Catalog& catalog);

// Writes the estimate back into the plan's per-pop fields.
void annotate_plan(Plan& plan, const Query& query, const Catalog& catalog);

// Same formulas over true selectivities. elapsed is the true cost under
// multiplicative log-normal noise drawn from the seed (sigma comes from
// catalog params). Reads/cpu/sort-heap statistics derive from the per-pop
// breakdown and are noise-free.
RuntimeStats true_run(const Plan& plan, const Query& query, const Catalog& catalog,
                      std::uint64_t seed);

// True cost without noise (sigma = 0 path of true_run).
double true_cost(const Plan& plan, const Query& query, const Catalog& catalog);

// Whether a pop delivers rows ordered on `column` of its table instance
// (SORT output, or an index access on that column).
bool delivers_order(const Plan& plan, int pop_id, const Catalog& catalog,
                    const std::string& column);

}  // namespace replan
