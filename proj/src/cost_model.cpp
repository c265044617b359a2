#include "replan/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "replan/error.hpp"

namespace replan {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double standard_gaussian(std::mt19937_64& rng) {
  // Box-Muller over explicit 53-bit uniforms keeps draws identical across
  // standard-library implementations.
  double u1 = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  double u2 = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  u1 = std::max(u1, 1e-300);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

struct Accum {
  double cpu = 0;
  double logical = 0;
  double physical = 0;
  long long hwm = 0;

  void add(const Accum& other, double scale = 1.0) {
    cpu += other.cpu * scale;
    logical += other.logical * scale;
    physical += other.physical * scale;
    hwm = std::max(hwm, other.hwm);
  }
};

struct WalkResult {
  double card = 0;
  long long row_size = 0;
  double cost = 0;
  std::set<std::string> instances;
  Accum acc;
};

class CostWalker {
 public:
  CostWalker(const Plan& plan, const Query& query, const Catalog& catalog, bool use_true)
      : plan_(plan), query_(query), catalog_(catalog), use_true_(use_true) {}

  WalkResult run(CostBreakdown* breakdown) {
    breakdown_ = breakdown;
    return walk(plan_.root, 1.0, false);
  }

 private:
  double sel(const LocalPred& pred) const {
    return use_true_ ? pred.true_selectivity : pred.est_selectivity;
  }
  double sel(const JoinPred& pred) const {
    return use_true_ ? pred.true_selectivity : pred.est_selectivity;
  }

  double local_sel_product(const std::string& instance,
                           const std::optional<std::string>& only_column = std::nullopt,
                           bool invert = false) const {
    double product = 1.0;
    for (const auto& pred : query_.local_preds) {
      if (pred.column.instance != instance) continue;
      bool on_column = only_column && pred.column.column == *only_column;
      if (only_column && (invert ? on_column : !on_column)) continue;
      product *= sel(pred);
    }
    return product;
  }

  const IndexDef& index_of(const Lolepop& pop) const {
    const IndexDef* idx = catalog_.index(*pop.index_name);
    if (!idx) throw Error(ErrorKind::UnknownIndex, "unknown index: " + *pop.index_name);
    if (!pop.table_ref || idx->table != pop.table_ref->table_name)
      throw Error(ErrorKind::UnknownIndex, "index " + idx->index_name + " is not on table " +
                                               (pop.table_ref ? pop.table_ref->table_name : "?"));
    return *idx;
  }

  // Crossing join predicates between two instance sets.
  std::vector<const JoinPred*> crossing(const std::set<std::string>& outer,
                                        const std::set<std::string>& inner) const {
    std::vector<const JoinPred*> preds;
    for (const auto& join : query_.join_preds) {
      bool lo = outer.count(join.left.instance), li = inner.count(join.left.instance);
      bool ro = outer.count(join.right.instance), ri = inner.count(join.right.instance);
      if ((lo && ri) || (li && ro)) preds.push_back(&join);
    }
    return preds;
  }

  // The column a join predicate constrains on the side covered by `instances`.
  static const ColumnRef& side_column(const JoinPred& join, const std::set<std::string>& instances) {
    return instances.count(join.left.instance) ? join.left : join.right;
  }

  void record(int id, const WalkResult& r) {
    if (breakdown_) breakdown_->per_pop[id] = PopEstimate{r.card, r.row_size, r.cost};
  }

  WalkResult scan_base(const Lolepop& pop) const {
    WalkResult r;
    const TableRef& ref = *pop.table_ref;
    if (!query_.has_instance(ref.instance))
      throw Error(ErrorKind::Structure, "plan scans instance " + ref.instance + " absent from query");
    r.row_size = catalog_.table(ref.table_name).row_size;
    r.instances.insert(ref.instance);
    return r;
  }

  WalkResult walk(int id, double probe_sel, bool under_fetch) {
    const Lolepop& pop = plan_.pop(id);
    WalkResult r;
    switch (pop.pop_type) {
      case PopType::TbScan: {
        r = scan_base(pop);
        const std::string& table = pop.table_ref->table_name;
        double base = static_cast<double>(catalog_.table(table).cardinality);
        r.card = base * local_sel_product(pop.table_ref->instance) * probe_sel;
        double pages = static_cast<double>(catalog_.pages(table));
        r.cost = pages;
        r.acc.logical = pages;
        r.acc.physical = pages;
        break;
      }
      case PopType::IxScan: {
        r = scan_base(pop);
        const IndexDef& idx = index_of(pop);
        const std::string& table = pop.table_ref->table_name;
        const std::string& instance = pop.table_ref->instance;
        double base = static_cast<double>(catalog_.table(table).cardinality);
        double pages = static_cast<double>(catalog_.pages(table));
        double sel_index = local_sel_product(instance, idx.column) * probe_sel;
        double sel_residual = local_sel_product(instance, idx.column, /*invert=*/true);
        r.card = under_fetch ? base * sel_index : base * sel_index * sel_residual;
        double touched = sel_index * pages * (idx.clustered ? 1.0 : catalog_.params.random_io_penalty);
        r.cost = 3.0 + touched;
        r.acc.logical = 3.0 + std::ceil(sel_index * pages);
        r.acc.physical = r.acc.logical;
        break;
      }
      case PopType::Fetch: {
        const Lolepop& child_pop = plan_.pop(pop.inputs.at(0));
        if (child_pop.pop_type != PopType::IxScan)
          throw Error(ErrorKind::Structure, "FETCH expects an IXSCAN input");
        WalkResult child = walk(pop.inputs.at(0), probe_sel, /*under_fetch=*/true);
        record(pop.inputs.at(0), child);
        const IndexDef& idx = index_of(child_pop);
        const std::string& table = child_pop.table_ref->table_name;
        const std::string& instance = child_pop.table_ref->instance;
        double fetched_rows = child.card;
        double pages_factor = idx.clustered ? catalog_.rows_per_page(table) : 1.0;
        r.card = fetched_rows * local_sel_product(instance, idx.column, /*invert=*/true);
        r.row_size = catalog_.table(table).row_size;
        r.cost = child.cost + fetched_rows * catalog_.params.random_io_penalty / pages_factor;
        r.instances = child.instances;
        r.acc = child.acc;
        r.acc.logical += std::ceil(fetched_rows);
        double fetched_pages = idx.clustered
                                   ? std::min(static_cast<double>(catalog_.pages(table)),
                                              std::ceil(fetched_rows / catalog_.rows_per_page(table)))
                                   : std::ceil(fetched_rows);
        r.acc.physical += fetched_pages;
        break;
      }
      case PopType::Sort: {
        WalkResult child = walk(pop.inputs.at(0), probe_sel, false);
        record(pop.inputs.at(0), child);
        double n = child.card;
        double sort_cpu = n * std::log2(std::max(n, 2.0)) * catalog_.params.cpu_row_cost;
        r = child;
        r.cost = child.cost + sort_cpu + spill_cost(n, child.row_size, &r.acc);
        r.acc.cpu += sort_cpu;
        break;
      }
      case PopType::Return: {
        WalkResult child = walk(pop.inputs.at(0), probe_sel, false);
        record(pop.inputs.at(0), child);
        r = child;
        break;
      }
      case PopType::NLJoin: {
        WalkResult outer = walk(pop.inputs.at(0), 1.0, false);
        record(pop.inputs.at(0), outer);

        // When the inner side is an index access on a join column, each
        // probe narrows the index by that join predicate's selectivity.
        auto [inner_probe_sel, folded] = probe_narrowing(pop.inputs.at(1), outer.instances);
        WalkResult inner = walk(pop.inputs.at(1), inner_probe_sel, false);
        record(pop.inputs.at(1), inner);

        double residual = 1.0;
        for (const JoinPred* join : crossing(outer.instances, inner.instances))
          if (!folded.count(join)) residual *= sel(*join);

        r.card = outer.card * inner.card * residual;
        r.row_size = outer.row_size + inner.row_size;
        r.cost = outer.cost + outer.card * inner.cost;
        r.instances = outer.instances;
        r.instances.insert(inner.instances.begin(), inner.instances.end());
        r.acc.add(outer.acc);
        r.acc.add(inner.acc, std::max(0.0, outer.card));
        break;
      }
      case PopType::HSJoin: {
        WalkResult outer = walk(pop.inputs.at(0), 1.0, false);
        record(pop.inputs.at(0), outer);
        WalkResult inner = walk(pop.inputs.at(1), 1.0, false);
        record(pop.inputs.at(1), inner);

        double join_sel = 1.0;
        for (const JoinPred* join : crossing(outer.instances, inner.instances)) join_sel *= sel(*join);
        double hash_cpu = 1.2 * (outer.card + inner.card) * catalog_.params.cpu_row_cost;
        r.card = outer.card * inner.card * join_sel;
        r.row_size = outer.row_size + inner.row_size;
        r.instances = outer.instances;
        r.instances.insert(inner.instances.begin(), inner.instances.end());
        r.acc.add(outer.acc);
        r.acc.add(inner.acc);
        r.acc.cpu += hash_cpu;
        // A build side beyond the sort heap partitions both inputs to disk.
        r.cost = outer.cost + inner.cost + hash_cpu +
                 hash_spill_cost(outer, inner, &r.acc);
        break;
      }
      case PopType::MSJoin: {
        WalkResult outer = walk(pop.inputs.at(0), 1.0, false);
        record(pop.inputs.at(0), outer);
        WalkResult inner = walk(pop.inputs.at(1), 1.0, false);
        record(pop.inputs.at(1), inner);

        double join_sel = 1.0;
        auto preds = crossing(outer.instances, inner.instances);
        for (const JoinPred* join : preds) join_sel *= sel(*join);

        double merge_cpu = (outer.card + inner.card) * catalog_.params.cpu_row_cost;
        double inline_sort = 0;
        if (!preds.empty()) {
          const JoinPred& key = *preds.front();
          if (!input_sorted(pop.inputs.at(0), side_column(key, outer.instances).column))
            inline_sort += outer.card * std::log2(std::max(outer.card, 2.0)) * catalog_.params.cpu_row_cost;
          if (!input_sorted(pop.inputs.at(1), side_column(key, inner.instances).column))
            inline_sort += inner.card * std::log2(std::max(inner.card, 2.0)) * catalog_.params.cpu_row_cost;
        }
        r.card = outer.card * inner.card * join_sel;
        r.row_size = outer.row_size + inner.row_size;
        r.instances = outer.instances;
        r.instances.insert(inner.instances.begin(), inner.instances.end());
        r.acc.add(outer.acc);
        r.acc.add(inner.acc);
        r.acc.cpu += merge_cpu + inline_sort;
        r.cost = outer.cost + inner.cost + merge_cpu + inline_sort;
        break;
      }
    }
    if (id == plan_.root) record(id, r);
    return r;
  }

  double spill_cost(double rows, long long row_size, Accum* acc) const {
    double bytes = rows * static_cast<double>(row_size);
    double heap_bytes =
        static_cast<double>(catalog_.params.sort_heap_pages) * static_cast<double>(catalog_.params.page_size);
    long long used_pages = static_cast<long long>(
        std::min(std::ceil(bytes / static_cast<double>(catalog_.params.page_size)),
                 static_cast<double>(catalog_.params.sort_heap_pages)));
    acc->hwm = std::max(acc->hwm, used_pages);
    if (bytes <= heap_bytes) return 0.0;
    double spill_pages = (bytes - heap_bytes) / static_cast<double>(catalog_.params.page_size);
    acc->logical += spill_pages;
    acc->physical += spill_pages;
    return catalog_.params.spill_multiplier * spill_pages;
  }

  double hash_spill_cost(const WalkResult& outer, const WalkResult& inner, Accum* acc) const {
    double page = static_cast<double>(catalog_.params.page_size);
    double heap_bytes = static_cast<double>(catalog_.params.sort_heap_pages) * page;
    double inner_bytes = inner.card * static_cast<double>(inner.row_size);
    long long used_pages = static_cast<long long>(std::min(
        std::ceil(inner_bytes / page), static_cast<double>(catalog_.params.sort_heap_pages)));
    acc->hwm = std::max(acc->hwm, used_pages);
    if (inner_bytes <= heap_bytes) return 0.0;
    double outer_bytes = outer.card * static_cast<double>(outer.row_size);
    double spill_pages = (inner_bytes + outer_bytes - heap_bytes) / page;
    acc->logical += spill_pages;
    acc->physical += spill_pages;
    return catalog_.params.spill_multiplier * spill_pages;
  }

  // Join-column narrowing for an NLJOIN inner index access. Returns the
  // selectivity multiplier plus the set of folded predicates.
  std::pair<double, std::set<const JoinPred*>> probe_narrowing(int inner_id,
                                                               const std::set<std::string>& outer) {
    std::set<const JoinPred*> folded;
    const Lolepop* top = &plan_.pop(inner_id);
    if (top->pop_type == PopType::Fetch) top = &plan_.pop(top->inputs.at(0));
    if (top->pop_type != PopType::IxScan) return {1.0, folded};
    const IndexDef& idx = index_of(*top);
    const std::string& instance = top->table_ref->instance;
    double factor = 1.0;
    for (const auto& join : query_.join_preds) {
      const ColumnRef* inner_side = nullptr;
      if (join.left.instance == instance && outer.count(join.right.instance)) inner_side = &join.left;
      if (join.right.instance == instance && outer.count(join.left.instance)) inner_side = &join.right;
      if (inner_side && inner_side->column == idx.column) {
        factor *= sel(join);
        folded.insert(&join);
      }
    }
    return {factor, folded};
  }

  bool input_sorted(int id, const std::string& column) const {
    return delivers_order_impl(id, column);
  }

  bool delivers_order_impl(int id, const std::string& column) const {
    const Lolepop& pop = plan_.pop(id);
    if (pop.pop_type == PopType::Sort) return true;
    if (pop.pop_type == PopType::IxScan) {
      const IndexDef* idx = catalog_.index(*pop.index_name);
      return idx && idx->column == column;
    }
    if (pop.pop_type == PopType::Fetch)
      return delivers_order_impl(pop.inputs.at(0), column);
    return false;
  }

  const Plan& plan_;
  const Query& query_;
  const Catalog& catalog_;
  bool use_true_;
  CostBreakdown* breakdown_ = nullptr;
};

}  // namespace

CostBreakdown estimate(const Plan& plan, const Query& query, const Catalog& catalog) {
  CostBreakdown breakdown;
  CostWalker walker(plan, query, catalog, /*use_true=*/false);
  WalkResult root = walker.run(&breakdown);
  breakdown.total = root.cost;
  return breakdown;
}

void annotate_plan(Plan& plan, const Query& query, const Catalog& catalog) {
  CostBreakdown breakdown = estimate(plan, query, catalog);
  for (auto& [id, pop] : plan.pops) {
    auto it = breakdown.per_pop.find(id);
    if (it == breakdown.per_pop.end()) continue;
    pop.est_cardinality = it->second.cardinality;
    pop.est_row_size = it->second.row_size;
    pop.est_cost = it->second.cost;
  }
}

double true_cost(const Plan& plan, const Query& query, const Catalog& catalog) {
  CostWalker walker(plan, query, catalog, /*use_true=*/true);
  return walker.run(nullptr).cost;
}

RuntimeStats true_run(const Plan& plan, const Query& query, const Catalog& catalog,
                      std::uint64_t seed) {
  CostWalker walker(plan, query, catalog, /*use_true=*/true);
  CostBreakdown breakdown;
  WalkResult root = walker.run(&breakdown);

  RuntimeStats stats;
  double noise = 1.0;
  if (catalog.params.noise_sigma > 0) {
    std::mt19937_64 rng(seed);
    noise = std::exp(catalog.params.noise_sigma * standard_gaussian(rng));
  }
  stats.elapsed = root.cost * noise;
  stats.logical_reads = static_cast<long long>(std::llround(root.acc.logical));
  stats.physical_reads = static_cast<long long>(std::llround(root.acc.physical));
  if (stats.physical_reads > stats.logical_reads) stats.physical_reads = stats.logical_reads;
  stats.cpu_time = root.acc.cpu;
  stats.sort_heap_hwm = root.acc.hwm;
  return stats;
}

bool delivers_order(const Plan& plan, int pop_id, const Catalog& catalog, const std::string& column) {
  const Lolepop& pop = plan.pop(pop_id);
  if (pop.pop_type == PopType::Sort) return true;
  if (pop.pop_type == PopType::IxScan) {
    const IndexDef* idx = pop.index_name ? catalog.index(*pop.index_name) : nullptr;
    return idx && idx->column == column;
  }
  if (pop.pop_type == PopType::Fetch) return delivers_order(plan, pop.inputs.at(0), catalog, column);
  return false;
}

}  // namespace replan
