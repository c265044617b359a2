#include "replan/matching.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <future>
#include <sstream>

#include "replan/codec.hpp"
#include "replan/cost_model.hpp"
#include "replan/error.hpp"
#include "replan/util.hpp"

namespace replan {

std::vector<Match> match_plan(const Plan& plan, const KnowledgeBase& kb, int max_joins) {
  std::vector<Match> matches;
  std::set<std::pair<std::string, std::set<int>>> seen;

  // Compile each template once per call and bucket by join count: a
  // pattern with j joins can only bind inside a segment of exactly j
  // joins (wider segments contain the same subgraph and would only
  // produce duplicates).
  std::map<size_t, std::vector<std::pair<const Template*, PatternQuery>>> compiled;
  for (const auto& [id, tpl] : kb.templates) {
    size_t joins = 0;
    for (const TemplateNode& node : decode_template(tpl).nodes)
      if (is_join(node.type)) ++joins;
    compiled[joins].emplace_back(&tpl, compile_from_template(tpl));
  }

  for (const SubPlan& sub : enumerate_subplans(plan, max_joins)) {
    auto bucket = compiled.find(sub.join_ids.size());
    if (bucket == compiled.end()) continue;
    TripleGraph graph = subplan_to_graph(plan, sub);
    for (const auto& [tpl, query] : bucket->second) {
      for (const Binding& binding : evaluate(query, graph)) {
        Match match;
        match.template_id = tpl->template_id;
        match.binding = binding;
        match.expected_improvement = tpl->improvement_ratio;
        for (const auto& [var, term] : binding.vars) {
          if (!starts_with(var, "pop_")) continue;
          auto id = iri::pop_id(term);
          if (id) match.covered_pops.insert(*id);
        }
        if (match.covered_pops.empty()) continue;
        if (!seen.insert({match.template_id, match.covered_pops}).second) continue;
        matches.push_back(std::move(match));
      }
    }
  }
  return matches;
}

std::vector<Match> select_matches(const std::vector<Match>& matches) {
  std::vector<const Match*> order;
  for (const Match& m : matches) order.push_back(&m);
  std::stable_sort(order.begin(), order.end(), [](const Match* a, const Match* b) {
    if (a->expected_improvement != b->expected_improvement)
      return a->expected_improvement > b->expected_improvement;
    if (a->covered_pops.size() != b->covered_pops.size())
      return a->covered_pops.size() < b->covered_pops.size();
    if (a->template_id != b->template_id) return a->template_id < b->template_id;
    return a->covered_pops < b->covered_pops;
  });

  std::vector<Match> kept;
  std::set<int> taken;
  for (const Match* m : order) {
    bool disjoint = true;
    for (int pop : m->covered_pops)
      if (taken.count(pop)) disjoint = false;
    if (!disjoint) continue;
    taken.insert(m->covered_pops.begin(), m->covered_pops.end());
    kept.push_back(*m);
  }
  return kept;
}

GuidelineDoc build_guidelines(const std::vector<Match>& kept, const KnowledgeBase& kb,
                              const Plan& plan) {
  (void)plan;
  GuidelineDoc doc;
  for (const Match& match : kept) {
    auto it = kb.templates.find(match.template_id);
    if (it == kb.templates.end())
      throw Error(ErrorKind::Internal, "match references unknown template " + match.template_id);
    const Template& tpl = it->second;

    std::function<GuidelineNode(const GuidelineNode&)> instantiate =
        [&](const GuidelineNode& node) -> GuidelineNode {
      GuidelineNode out = node;
      out.children.clear();
      if (!node.is_join_tag()) {
        if (!node.tabid)
          throw Error(ErrorKind::Internal, "template guideline leaf without TABID label");
        auto bound = match.binding.vars.find("inst_" + *node.tabid);
        if (bound == match.binding.vars.end() || !bound->second.is_string())
          throw Error(ErrorKind::Internal,
                      "canonical label " + *node.tabid + " is unbound in the match");
        out.tabid = bound->second.text;
        if (node.index) {
          auto idx = match.binding.vars.find("idx_" + *node.index);
          if (idx == match.binding.vars.end() || !idx->second.is_string())
            throw Error(ErrorKind::Internal,
                        "canonical index label " + *node.index + " is unbound in the match");
          out.index = idx->second.text;
        }
      }
      for (const auto& child : node.children) out.children.push_back(instantiate(child));
      return out;
    };
    doc.roots.push_back(instantiate(tpl.guideline));
  }
  return doc;
}

ReoptResult reoptimize(const Query& query, const Catalog& catalog, const KnowledgeBase& kb,
                       const ReoptConfig& config) {
  ReoptResult result;
  ReoptReport& report = result.report;
  report.query_id = query.id;

  PlannerResult original = optimize(query, catalog);
  report.original_cost = estimate(original.plan, query, catalog).total;

  std::vector<Match> matches = match_plan(original.plan, kb, config.max_joins);
  std::vector<Match> kept = select_matches(matches);
  result.guidelines = build_guidelines(kept, kb, original.plan);

  if (config.explain)
    for (const Match& match : kept)
      report.explanations.push_back(explain_query(compile_from_template(kb.templates.at(match.template_id))));

  Plan reopt_plan = original.plan;
  if (!kept.empty()) {
    OptimizerOptions options;
    options.guidelines = &result.guidelines;
    PlannerResult res = optimize(query, catalog, options);
    reopt_plan = std::move(res.plan);
    report.ignored = std::move(res.ignored);
  }
  report.reopt_cost = estimate(reopt_plan, query, catalog).total;

  if (config.verify) {
    double original_elapsed = true_run(original.plan, query, catalog, mix_seed(config.seed, 1)).elapsed;
    double reopt_elapsed = true_run(reopt_plan, query, catalog, mix_seed(config.seed, 2)).elapsed;
    report.original_elapsed = original_elapsed;
    if (reopt_elapsed > original_elapsed) {
      report.fell_back = true;
      report.dropped = std::move(kept);
      kept.clear();
      reopt_plan = original.plan;
      report.reopt_cost = report.original_cost;
      report.reopt_elapsed = original_elapsed;
    } else {
      report.reopt_elapsed = reopt_elapsed;
    }
  }

  report.applied = kept;
  result.plan = std::move(reopt_plan);
  return result;
}

std::vector<ReoptResult> reoptimize_workload(const Workload& workload, const Catalog& catalog,
                                             const KnowledgeBase& kb, const ReoptConfig& config,
                                             int workers) {
  std::vector<ReoptResult> results(workload.queries.size());
  workers = std::max(1, workers);
  if (workers == 1) {
    for (size_t i = 0; i < workload.queries.size(); ++i)
      results[i] = reoptimize(workload.queries[i], catalog, kb, config);
    return results;
  }
  std::vector<std::future<void>> futures;
  std::atomic<size_t> next{0};
  for (int w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&]() {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= workload.queries.size()) return;
        results[i] = reoptimize(workload.queries[i], catalog, kb, config);
      }
    }));
  for (auto& f : futures) f.get();
  return results;
}

std::string render_workload_report(const std::vector<ReoptResult>& results, bool verified) {
  std::ostringstream out;
  out << "query\tmatched_templates\test_cost_before\test_cost_after";
  if (verified) out << "\telapsed_before\telapsed_after";
  out << "\tignored\n";
  for (const auto& result : results) {
    const ReoptReport& r = result.report;
    out << r.query_id << "\t";
    if (r.applied.empty() && r.dropped.empty()) out << "-";
    std::vector<std::string> ids;
    for (const auto& m : r.applied) ids.push_back(m.template_id);
    for (const auto& m : r.dropped) ids.push_back(m.template_id + "(dropped)");
    for (size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << "\t" << format_number(r.original_cost) << "\t" << format_number(r.reopt_cost);
    if (verified)
      out << "\t" << format_number(r.original_elapsed.value_or(0)) << "\t"
          << format_number(r.reopt_elapsed.value_or(0));
    out << "\t" << r.ignored.size() << "\n";
  }
  return out.str();
}

}  // namespace replan
