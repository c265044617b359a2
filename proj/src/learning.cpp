#include "replan/learning.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <functional>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "replan/codec.hpp"
#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

std::vector<SubQuery> segment_query(const Query& query, int max_joins) {
  if (max_joins < 1) throw Error(ErrorKind::Range, "max_joins must be >= 1");
  std::vector<std::string> instances;
  for (const auto& ref : query.tables) instances.push_back(ref.instance);
  size_t n = instances.size();
  if (n < 2 || n > 63) return {};

  auto induced_joins = [&](std::uint64_t mask) {
    std::vector<JoinPred> joins;
    for (const auto& join : query.join_preds) {
      size_t l = n, r = n;
      for (size_t i = 0; i < n; ++i) {
        if (instances[i] == join.left.instance) l = i;
        if (instances[i] == join.right.instance) r = i;
      }
      if (l < n && r < n && (mask & (1ULL << l)) && (mask & (1ULL << r))) joins.push_back(join);
    }
    return joins;
  };

  auto connected = [&](std::uint64_t mask, const std::vector<JoinPred>& joins) {
    std::uint64_t seen = mask & (~mask + 1);
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& join : joins) {
        std::uint64_t l = 0, r = 0;
        for (size_t i = 0; i < n; ++i) {
          if (instances[i] == join.left.instance) l = 1ULL << i;
          if (instances[i] == join.right.instance) r = 1ULL << i;
        }
        if ((seen & l) && !(seen & r)) seen |= r, grew = true;
        else if ((seen & r) && !(seen & l)) seen |= l, grew = true;
      }
    }
    return seen == mask;
  };

  std::vector<SubQuery> result;
  for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
    if (std::popcount(mask) < 2) continue;
    auto joins = induced_joins(mask);
    if (joins.empty() || static_cast<int>(joins.size()) > max_joins) continue;
    if (!connected(mask, joins)) continue;

    SubQuery sub;
    sub.parent_query_id = query.id;
    Query& q = sub.query;
    std::ostringstream id;
    id << query.id << "#";
    for (size_t i = 0; i < n; ++i)
      if (mask & (1ULL << i)) {
        q.tables.push_back(query.table_by_instance(instances[i]));
        id << instances[i] << "/";
      }
    q.id = id.str();
    q.join_preds = joins;
    for (const auto& pred : query.local_preds) {
      auto it = std::find(instances.begin(), instances.end(), pred.column.instance);
      if (it == instances.end()) continue;
      size_t index = static_cast<size_t>(std::distance(instances.begin(), it));
      if (mask & (1ULL << index)) q.local_preds.push_back(pred);
    }
    result.push_back(std::move(sub));
  }

  std::sort(result.begin(), result.end(), [](const SubQuery& a, const SubQuery& b) {
    if (a.query.tables.size() != b.query.tables.size())
      return a.query.tables.size() < b.query.tables.size();
    return a.query.id < b.query.id;
  });
  return result;
}

std::pair<std::vector<int>, std::vector<int>> kmeans_filter(const std::vector<double>& elapsed) {
  size_t n = elapsed.size();
  if (n < 2) throw Error(ErrorKind::Range, "kmeans_filter needs at least two runs");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return elapsed[a] != elapsed[b] ? elapsed[a] < elapsed[b] : a < b; });

  std::vector<double> sorted(n);
  for (size_t i = 0; i < n; ++i) sorted[i] = elapsed[order[i]];

  std::vector<double> prefix(n + 1, 0), prefix_sq(n + 1, 0);
  for (size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + sorted[i];
    prefix_sq[i + 1] = prefix_sq[i] + sorted[i] * sorted[i];
  }
  auto sse = [&](size_t lo, size_t hi) {  // [lo, hi)
    double count = static_cast<double>(hi - lo);
    double sum = prefix[hi] - prefix[lo];
    double sum_sq = prefix_sq[hi] - prefix_sq[lo];
    return sum_sq - sum * sum / count;
  };

  size_t best_split = 1;
  double best_sse = sse(0, 1) + sse(1, n);
  for (size_t split = 2; split < n; ++split) {
    double candidate = sse(0, split) + sse(split, n);
    if (candidate < best_sse) {
      best_sse = candidate;
      best_split = split;
    }
  }

  double mean_low = (prefix[best_split] - prefix[0]) / static_cast<double>(best_split);
  double mean_high = (prefix[n] - prefix[best_split]) / static_cast<double>(n - best_split);
  bool no_outliers = mean_high <= 0 || (mean_high - mean_low) / mean_high < 0.10;

  std::vector<int> prospective, anomaly;
  for (size_t i = 0; i < n; ++i) {
    if (no_outliers || i < best_split) prospective.push_back(static_cast<int>(order[i]));
    else anomaly.push_back(static_cast<int>(order[i]));
  }
  std::sort(prospective.begin(), prospective.end());
  std::sort(anomaly.begin(), anomaly.end());
  return {prospective, anomaly};
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::Internal, "median of empty set");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

double prospective_score(const std::vector<double>& elapsed) {
  if (elapsed.empty()) throw Error(ErrorKind::Range, "no runs to score");
  if (elapsed.size() == 1) return elapsed[0];
  auto [prospective, anomaly] = kmeans_filter(elapsed);
  std::vector<double> kept;
  for (int i : prospective) kept.push_back(elapsed[i]);
  return median(kept);
}

size_t rank(const std::vector<RankedCandidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorKind::Range, "rank over an empty candidate list");

  struct Scored {
    double score = 0;
    double logical = 0, physical = 0, cpu = 0, hwm = 0;
    std::string text;
  };
  std::vector<Scored> scored(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& candidate = candidates[i];
    std::vector<double> elapsed;
    for (const auto& run : candidate.runs) elapsed.push_back(run.elapsed);
    scored[i].score = prospective_score(elapsed);

    std::vector<int> kept;
    if (elapsed.size() < 2) kept = {0};
    else kept = kmeans_filter(elapsed).first;
    std::vector<double> lr, pr, cpu, hwm;
    for (int k : kept) {
      lr.push_back(static_cast<double>(candidate.runs[k].logical_reads));
      pr.push_back(static_cast<double>(candidate.runs[k].physical_reads));
      cpu.push_back(candidate.runs[k].cpu_time);
      hwm.push_back(static_cast<double>(candidate.runs[k].sort_heap_hwm));
    }
    scored[i].logical = median(lr);
    scored[i].physical = median(pr);
    scored[i].cpu = median(cpu);
    scored[i].hwm = median(hwm);
    scored[i].text = structure_signature(candidate.plan, true);
  }

  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i)
    if (scored[i].score < scored[best].score) best = i;

  // Tie group: within 1% of the best score, resolved by resource medians,
  // then by structure.
  size_t winner = best;
  auto better = [&](size_t a, size_t b) {
    auto key = [&](size_t i) {
      return std::tie(scored[i].logical, scored[i].physical, scored[i].cpu, scored[i].hwm,
                      scored[i].text);
    };
    return key(a) < key(b);
  };
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (i == winner) continue;
    if (scored[i].score <= scored[best].score * 1.01 && better(i, winner)) winner = i;
  }
  return winner;
}

namespace {

std::string canonical_subquery_signature(const Query& query) {
  size_t n = query.tables.size();
  auto render = [&](const std::vector<size_t>& perm) {
    std::map<std::string, size_t> position;
    for (size_t i = 0; i < n; ++i) position[query.tables[perm[i]].instance] = i;
    std::ostringstream out;
    for (size_t i = 0; i < n; ++i) out << "T:" << query.tables[perm[i]].table_name << ";";
    std::vector<std::string> joins, locals;
    for (const auto& join : query.join_preds) {
      std::ostringstream a, b;
      a << position.at(join.left.instance) << "." << join.left.column;
      b << position.at(join.right.instance) << "." << join.right.column;
      std::string lo = std::min(a.str(), b.str()), hi = std::max(a.str(), b.str());
      std::ostringstream j;
      j << "J:" << lo << "=" << hi << " " << format_number(join.est_selectivity) << " "
        << format_number(join.true_selectivity) << ";";
      joins.push_back(j.str());
    }
    for (const auto& pred : query.local_preds) {
      std::ostringstream p;
      p << "P:" << position.at(pred.column.instance) << "." << pred.column.column << pred.op
        << pred.value << " " << format_number(pred.est_selectivity) << " "
        << format_number(pred.true_selectivity) << ";";
      locals.push_back(p.str());
    }
    std::sort(joins.begin(), joins.end());
    std::sort(locals.begin(), locals.end());
    for (const auto& j : joins) out << j;
    for (const auto& p : locals) out << p;
    return out.str();
  };

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n > 7) return render(perm);  // permutation canonicalization is factorial
  std::string best;
  do {
    std::string text = render(perm);
    if (best.empty() || text < best) best = text;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Rename-invariant seed key: like the signature but with table and column
// names canonicalized away.
std::string seed_signature(const Query& query) {
  Query stripped = query;
  std::map<std::string, std::string> tables, columns;
  auto table_label = [&](const std::string& name) {
    auto [it, inserted] = tables.emplace(name, "T" + std::to_string(tables.size() + 1));
    return it->second;
  };
  auto column_label = [&](const std::string& name) {
    auto [it, inserted] = columns.emplace(name, "C" + std::to_string(columns.size() + 1));
    return it->second;
  };
  for (auto& ref : stripped.tables) {
    ref.table_name = table_label(ref.table_name);
    ref.instance = "Q";
  }
  for (auto& join : stripped.join_preds) {
    join.left.column = column_label(join.left.column);
    join.right.column = column_label(join.right.column);
  }
  for (auto& pred : stripped.local_preds) {
    pred.column.column = column_label(pred.column.column);
    pred.value = "V";
  }
  // Instances are identified positionally for the canonical form.
  size_t n = query.tables.size();
  std::map<std::string, std::string> instance_label;
  for (size_t i = 0; i < n; ++i)
    instance_label[query.tables[i].instance] = "Q" + std::to_string(i + 1);
  for (auto& join : stripped.join_preds) {
    join.left.instance = instance_label.at(join.left.instance);
    join.right.instance = instance_label.at(join.right.instance);
  }
  for (auto& pred : stripped.local_preds)
    pred.column.instance = instance_label.at(pred.column.instance);
  for (size_t i = 0; i < n; ++i) stripped.tables[i].instance = "Q" + std::to_string(i + 1);
  stripped.id = "";
  Workload w;
  w.queries.push_back(std::move(stripped));
  return serialize_workload(w);
}

struct VariantOutcome {
  Plan baseline;
  Plan winner;
  std::string baseline_sig;
  std::string winner_sig;
  double ratio = 1.0;
  double true_sel = 0;
};

}  // namespace

std::vector<Rewrite> discover(const SubQuery& subquery, const Catalog& catalog,
                              const LearnConfig& config) {
  const Query& base = subquery.query;
  std::uint64_t sq_seed = mix_seed(config.seed, seed_signature(base));
  std::vector<Rewrite> rewrites;

  int pred_count = static_cast<int>(base.local_preds.size());
  for (int pred = 0; pred < std::max(1, pred_count); ++pred) {
    std::vector<Query> variants =
        pred_count == 0 ? std::vector<Query>{base} : sample_ranges(base, catalog, pred, config.k_variants);

    std::vector<VariantOutcome> outcomes;
    for (size_t v = 0; v < variants.size(); ++v) {
      const Query& variant = variants[v];
      std::uint64_t variant_seed = mix_seed(sq_seed, (static_cast<std::uint64_t>(pred) << 32) | v);

      std::vector<RankedCandidate> candidates;
      candidates.push_back(RankedCandidate{optimize(variant, catalog).plan, {}});
      for (int r = 0; r < config.n_random; ++r)
        candidates.push_back(
            RankedCandidate{random_plan(variant, catalog, mix_seed(variant_seed, 1000 + r)), {}});

      for (size_t c = 0; c < candidates.size(); ++c)
        for (int run = 0; run < config.run_count; ++run)
          candidates[c].runs.push_back(true_run(candidates[c].plan, variant, catalog,
                                                mix_seed(variant_seed, (c << 16) | run)));

      size_t winner = rank(candidates);

      std::vector<double> baseline_elapsed, winner_elapsed;
      for (const auto& run : candidates[0].runs) baseline_elapsed.push_back(run.elapsed);
      for (const auto& run : candidates[winner].runs) winner_elapsed.push_back(run.elapsed);

      VariantOutcome outcome;
      outcome.baseline = candidates[0].plan;
      outcome.winner = candidates[winner].plan;
      outcome.baseline_sig = structure_signature(outcome.baseline, true);
      outcome.winner_sig = structure_signature(outcome.winner, true);
      outcome.ratio = prospective_score(baseline_elapsed) / prospective_score(winner_elapsed);
      outcome.true_sel = pred_count == 0 ? 0 : variant.local_preds[pred].true_selectivity;
      outcomes.push_back(std::move(outcome));
    }

    // Maximal contiguous intervals with one improving structure pair.
    size_t i = 0;
    while (i < outcomes.size()) {
      if (outcomes[i].winner_sig == outcomes[i].baseline_sig ||
          outcomes[i].ratio < config.min_improvement) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j + 1 < outcomes.size() && outcomes[j + 1].winner_sig == outcomes[i].winner_sig &&
             outcomes[j + 1].baseline_sig == outcomes[i].baseline_sig &&
             outcomes[j + 1].ratio >= config.min_improvement)
        ++j;

      size_t representative = i + (j - i) / 2;
      Rewrite rewrite;
      rewrite.problem_plan = outcomes[representative].baseline;
      rewrite.solution_plan = outcomes[representative].winner;
      rewrite.workload_id = config.workload_id;
      rewrite.query_id = subquery.parent_query_id;
      rewrite.variant_count = static_cast<int>(j - i + 1);
      rewrite.improvement_ratio = outcomes[i].ratio;
      for (size_t k = i; k <= j; ++k) rewrite.improvement_ratio =
          std::min(rewrite.improvement_ratio, outcomes[k].ratio);

      // Bounds: per-node estimate ranges across the interval. Identical
      // structure means identical pre-order ids across variants.
      for (size_t k = i; k <= j; ++k) {
        CostBreakdown breakdown = estimate(outcomes[k].baseline, variants[k], catalog);
        for (const auto& [id, est] : breakdown.per_pop) {
          auto widen = [&](const char* property, double value) {
            BoundKey key{id, property};
            auto it = rewrite.bounds.find(key);
            if (it == rewrite.bounds.end()) rewrite.bounds.emplace(key, std::make_pair(value, value));
            else {
              it->second.first = std::min(it->second.first, value);
              it->second.second = std::max(it->second.second, value);
            }
          };
          widen(kBoundCardinality, est.cardinality);
          widen(kBoundRowSize, static_cast<double>(est.row_size));
        }
      }
      rewrites.push_back(std::move(rewrite));
      i = j + 1;
    }
  }
  return rewrites;
}

Template abstract_rewrite(const Rewrite& rewrite) {
  const Plan& problem = rewrite.problem_plan;
  const Plan& solution = rewrite.solution_plan;

  // Canonical labels by depth-first traversal of the problem plan below
  // the RETURN, outer input before inner.
  std::vector<int> order;
  std::function<void(int)> collect = [&](int id) {
    order.push_back(id);
    for (int child : problem.pop(id).inputs) collect(child);
  };
  collect(problem.pop(problem.root).inputs.at(0));

  std::map<int, int> pop_label;
  std::map<std::string, std::string> table_label, instance_label, index_label;
  auto name = [](std::map<std::string, std::string>& names, const std::string& key,
                 const char* prefix) -> const std::string& {
    auto [it, inserted] = names.emplace(key, prefix + std::to_string(names.size() + 1));
    return it->second;
  };
  for (size_t i = 0; i < order.size(); ++i) {
    int id = order[i];
    pop_label[id] = static_cast<int>(i + 1);
    const Lolepop& pop = problem.pop(id);
    if (pop.table_ref) {
      name(table_label, pop.table_ref->table_name, "T");
      name(instance_label, pop.table_ref->instance, "Q");
    }
    if (pop.index_name) name(index_label, *pop.index_name, "I");
  }

  Template tpl;
  tpl.template_id = fresh_template_id();
  tpl.improvement_ratio = rewrite.improvement_ratio;
  tpl.provenance.workload_id = rewrite.workload_id;
  tpl.provenance.query_id = rewrite.query_id;

  TripleGraph& graph = tpl.pattern_graph;
  auto subject_of = [&](int id) { return Term::resource(iri::pop(pop_label.at(id))); };
  for (int id : order) {
    const Lolepop& pop = problem.pop(id);
    Term subject = subject_of(id);
    graph.insert(subject, Term::resource(iri::prop(prop::kPopType)),
                 Term::string(std::string(to_string(pop.pop_type))));
    if (pop.table_ref) {
      graph.insert(subject, Term::resource(iri::prop(prop::kTableName)),
                   Term::string(table_label.at(pop.table_ref->table_name)));
      graph.insert(subject, Term::resource(iri::prop(prop::kTableInstance)),
                   Term::string(instance_label.at(pop.table_ref->instance)));
    }
    if (pop.index_name)
      graph.insert(subject, Term::resource(iri::prop(prop::kIndexName)),
                   Term::string(index_label.at(*pop.index_name)));

    auto bound = [&](const char* property) -> std::pair<double, double> {
      auto it = rewrite.bounds.find(BoundKey{id, property});
      if (it != rewrite.bounds.end()) return it->second;
      double fallback = property == std::string(kBoundCardinality)
                            ? pop.est_cardinality
                            : static_cast<double>(pop.est_row_size);
      return {fallback, fallback};
    };
    auto [card_lo, card_hi] = bound(kBoundCardinality);
    graph.insert(subject, Term::resource(iri::prop(prop::kLowerCardinality)), Term::num(card_lo));
    graph.insert(subject, Term::resource(iri::prop(prop::kHigherCardinality)), Term::num(card_hi));
    if (is_scan(pop.pop_type)) {
      auto [row_lo, row_hi] = bound(kBoundRowSize);
      graph.insert(subject, Term::resource(iri::prop(prop::kLowerRowSize)), Term::num(row_lo));
      graph.insert(subject, Term::resource(iri::prop(prop::kHigherRowSize)), Term::num(row_hi));
    }

    for (size_t slot = 0; slot < pop.inputs.size(); ++slot) {
      Term child = subject_of(pop.inputs[slot]);
      graph.insert(subject,
                   Term::resource(iri::prop(slot == 0 ? prop::kOuterInputStream : prop::kInnerInputStream)),
                   child);
      graph.insert(child, Term::resource(iri::prop(prop::kOutputStream)), subject);
    }
  }

  // Match order for same-typed nodes, taken from the source plan's pop
  // IRIs so the template always re-matches the plan it came from.
  for (size_t a = 0; a < order.size(); ++a) {
    for (size_t b = a + 1; b < order.size(); ++b) {
      if (problem.pop(order[a]).pop_type != problem.pop(order[b]).pop_type) continue;
      bool a_greater = iri::pop(order[a]) > iri::pop(order[b]);
      int greater = pop_label.at(a_greater ? order[a] : order[b]);
      int lesser = pop_label.at(a_greater ? order[b] : order[a]);
      graph.insert(Term::resource(iri::pop(greater)), Term::resource(iri::prop(prop::kDistinctAfter)),
                   Term::resource(iri::pop(lesser)));
    }
  }

  // Canonical guideline from the solution plan; SORT and FETCH operators
  // are folded into the access tags.
  std::function<GuidelineNode(int)> guide = [&](int id) -> GuidelineNode {
    const Lolepop& pop = solution.pop(id);
    if (is_join(pop.pop_type)) {
      GuidelineNode node;
      node.tag = pop.pop_type;
      node.children.push_back(guide(pop.inputs[0]));
      node.children.push_back(guide(pop.inputs[1]));
      return node;
    }
    if (pop.pop_type == PopType::Sort || pop.pop_type == PopType::Fetch) return guide(pop.inputs[0]);
    if (pop.pop_type == PopType::TbScan) {
      GuidelineNode node;
      node.tag = PopType::TbScan;
      node.tabid = instance_label.at(pop.table_ref->instance);
      return node;
    }
    if (pop.pop_type == PopType::IxScan) {
      GuidelineNode node;
      node.tag = PopType::IxScan;
      node.tabid = instance_label.at(pop.table_ref->instance);
      auto it = index_label.find(*pop.index_name);
      if (it != index_label.end()) node.index = it->second;
      return node;
    }
    throw Error(ErrorKind::Internal, "unexpected pop in solution plan");
  };
  tpl.guideline = guide(solution.pop(solution.root).inputs.at(0));

  validate_template(tpl);
  return tpl;
}

LearnOutcome learn_workload(const Workload& workload, const Catalog& catalog,
                            const LearnConfig& config) {
  LearnOutcome outcome;
  outcome.queries_analyzed = static_cast<int>(workload.queries.size());

  // Segment and deduplicate structurally identical sub-queries.
  std::vector<SubQuery> unique;
  std::set<std::string> seen;
  for (const auto& query : workload.queries) {
    for (auto& sub : segment_query(query, config.max_joins)) {
      std::string signature = canonical_subquery_signature(sub.query);
      if (seen.insert(signature).second) unique.push_back(std::move(sub));
    }
  }
  outcome.subqueries_analyzed = static_cast<int>(unique.size());

  // Discover concurrently; results keep sub-query order so scheduling
  // cannot change the outcome.
  std::vector<std::vector<Rewrite>> discovered(unique.size());
  int workers = std::max(1, config.workers);
  if (workers == 1) {
    for (size_t i = 0; i < unique.size(); ++i) discovered[i] = discover(unique[i], catalog, config);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w)
      futures.push_back(std::async(std::launch::async, [&]() {
        while (true) {
          size_t i = next.fetch_add(1);
          if (i >= unique.size()) return;
          discovered[i] = discover(unique[i], catalog, config);
        }
      }));
    for (auto& f : futures) f.get();
  }

  // Abstract and coalesce structurally identical templates.
  std::map<std::string, size_t> by_structure;
  for (size_t i = 0; i < unique.size(); ++i) {
    for (const Rewrite& rewrite : discovered[i]) {
      Template tpl = abstract_rewrite(rewrite);
      tpl.provenance.timestamp = config.timestamp;

      std::ostringstream instance_list;
      for (const auto& ref : unique[i].query.tables) instance_list << ref.instance << " ";

      std::string key = template_structure_key(tpl);
      auto it = by_structure.find(key);
      if (it != by_structure.end()) {
        outcome.templates[it->second] = merge_templates(outcome.templates[it->second], tpl);
        continue;
      }
      by_structure.emplace(key, outcome.templates.size());
      outcome.rows.push_back(LearnReportRow{tpl.template_id, tpl.improvement_ratio,
                                            rewrite.query_id, instance_list.str(),
                                            rewrite.variant_count});
      outcome.templates.push_back(std::move(tpl));
    }
  }
  return outcome;
}

}  // namespace replan
