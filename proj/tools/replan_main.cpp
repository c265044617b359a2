#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "replan/bench.hpp"
#include "replan/error.hpp"
#include "replan/knowledge_base.hpp"
#include "replan/learning.hpp"
#include "replan/matching.hpp"
#include "replan/util.hpp"

namespace {

using namespace replan;

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonArgs {
  std::string catalog_path;
  std::string workload_path;
  std::string kb_path;
  int max_joins = 4;
  std::uint64_t seed = 1;
  int workers = 1;
};

int run_learn(const CommonArgs& args, const std::string& timestamp,
              const std::string& guidelines_dir) {
  Catalog catalog = parse_catalog(read_file(args.catalog_path));
  Workload workload = parse_workload(read_file(args.workload_path));

  LearnConfig config;
  config.max_joins = args.max_joins;
  config.seed = args.seed;
  config.workers = args.workers;
  config.workload_id = std::filesystem::path(args.workload_path).stem().string();
  config.timestamp = timestamp.empty() ? utc_now() : timestamp;

  LearnOutcome outcome = learn_workload(workload, catalog, config);

  KnowledgeBase kb;
  if (std::filesystem::exists(args.kb_path)) kb = load_kb_file(args.kb_path);
  if (kb.meta.created.empty()) kb.meta.created = config.timestamp;
  kb.meta.provenance.push_back(config.workload_id + " @ " + config.timestamp);
  for (const Template& tpl : outcome.templates) add_template(kb, tpl);
  save_kb_file(kb, args.kb_path);

  std::string sidecar = guidelines_dir.empty() ? args.kb_path + ".guidelines" : guidelines_dir;
  std::filesystem::create_directories(sidecar);
  for (const auto& [id, tpl] : kb.templates)
    write_file_atomic(sidecar + "/" + id + ".xml", guideline_to_xml(GuidelineDoc{{tpl.guideline}}));

  std::cout << "queries\t" << outcome.queries_analyzed << "\n";
  std::cout << "subqueries\t" << outcome.subqueries_analyzed << "\n";
  std::cout << "templates_new\t" << outcome.templates.size() << "\n";
  std::cout << "templates_total\t" << kb.templates.size() << "\n";
  std::cout << "template_id\timprovement\tquery\tsubquery\tvariants\n";
  for (const auto& row : outcome.rows)
    std::cout << row.template_id << "\t" << format_number(row.improvement_ratio) << "\t"
              << row.query_id << "\t" << row.subquery << "\t" << row.variant_count << "\n";
  return 0;
}

int run_reoptimize(const CommonArgs& args, bool verify, bool explain, const std::string& out_dir) {
  Catalog catalog = parse_catalog(read_file(args.catalog_path));
  Workload workload = parse_workload(read_file(args.workload_path));
  KnowledgeBase kb = load_kb_file(args.kb_path);

  ReoptConfig config;
  config.max_joins = args.max_joins;
  config.verify = verify;
  config.seed = args.seed;
  config.explain = explain;

  std::filesystem::create_directories(out_dir);
  std::vector<ReoptResult> results = reoptimize_workload(workload, catalog, kb, config, args.workers);
  for (size_t q = 0; q < results.size(); ++q) {
    const ReoptResult& result = results[q];
    const std::string& id = workload.queries[q].id;
    write_file_atomic(out_dir + "/" + id + ".guidelines.xml", guideline_to_xml(result.guidelines));
    write_file_atomic(out_dir + "/" + id + ".plan", serialize_plan(result.plan));
    if (explain)
      for (size_t i = 0; i < result.report.explanations.size(); ++i)
        write_file_atomic(out_dir + "/" + id + ".match" + std::to_string(i) + ".sparql",
                          result.report.explanations[i]);
  }
  std::string report = render_workload_report(results, verify);
  write_file_atomic(out_dir + "/report.tsv", report);
  std::cout << report;
  return 0;
}

int run_match(const CommonArgs& args, bool explain) {
  Catalog catalog = parse_catalog(read_file(args.catalog_path));
  Workload workload = parse_workload(read_file(args.workload_path));
  KnowledgeBase kb = load_kb_file(args.kb_path);

  std::cout << "query\ttemplate\timprovement\tcovered_pops\n";
  for (const Query& query : workload.queries) {
    Plan plan = optimize(query, catalog).plan;
    std::vector<Match> matches = match_plan(plan, kb, args.max_joins);
    if (explain)
      for (const auto& [id, tpl] : kb.templates)
        std::cerr << "# template " << id << "\n" << explain_query(compile_from_template(tpl));
    for (const Match& match : matches) {
      std::cout << query.id << "\t" << match.template_id << "\t"
                << format_number(match.expected_improvement) << "\t";
      bool first = true;
      for (int pop : match.covered_pops) {
        std::cout << (first ? "" : ",") << pop;
        first = false;
      }
      std::cout << "\n";
    }
  }
  return 0;
}

int run_bench(const std::string& suite, const std::string& out_path, std::uint64_t seed) {
  std::ostringstream out;
  if (suite == "learning" || suite == "all") {
    out << "# learning threshold sweep\n"
        << render_bench_tsv(bench_learning_threshold({2, 3, 4}, 6, seed));
    out << "# workload scale sweep\n"
        << render_bench_tsv(bench_workload_scale({10, 20, 30, 40, 50}, seed));
  }
  if (suite == "matching" || suite == "all")
    out << "# matching latency sweep\n"
        << render_bench_tsv(bench_matching({4, 8, 16, 24, 32}, 20, seed));
  if (suite == "routinization" || suite == "all")
    out << "# routinization grid\n"
        << render_bench_tsv(bench_routinization(100, {100, 250, 500, 750, 1000}, seed));
  if (out.str().empty()) throw Error(ErrorKind::Range, "unknown bench suite: " + suite);
  if (!out_path.empty()) write_file_atomic(out_path, out.str());
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"replan: workload-driven query plan re-optimization"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string timestamp, guidelines_dir, out_dir = "reopt-out", suite = "all", bench_out;
  bool verify = false, explain = false;

  auto add_common = [&](CLI::App* cmd, bool needs_workload) {
    cmd->add_option("--catalog", args.catalog_path, "catalog file")->required();
    if (needs_workload) cmd->add_option("--workload", args.workload_path, "workload file")->required();
    cmd->add_option("--kb", args.kb_path, "knowledge base file")->required();
    cmd->add_option("--max-joins", args.max_joins, "segment size threshold")->default_val(4);
    cmd->add_option("--seed", args.seed, "master seed")->default_val(1);
  };

  CLI::App* learn = app.add_subcommand("learn", "discover problem patterns offline");
  add_common(learn, true);
  learn->add_option("--workers", args.workers, "concurrent sub-query analyses")->default_val(1);
  learn->add_option("--timestamp", timestamp, "provenance timestamp (defaults to now)");
  learn->add_option("--guidelines-dir", guidelines_dir, "sidecar directory for guideline XML");

  CLI::App* reopt = app.add_subcommand("reoptimize", "re-optimize a workload against the knowledge base");
  add_common(reopt, true);
  reopt->add_option("--workers", args.workers, "concurrent query re-optimizations")->default_val(1);
  reopt->add_flag("--verify", verify, "execute original and re-optimized plans, keep the faster");
  reopt->add_flag("--explain-match", explain, "emit the generated match queries");
  reopt->add_option("--out", out_dir, "output directory")->required();

  CLI::App* match = app.add_subcommand("match", "match only, without re-optimizing");
  add_common(match, true);
  match->add_flag("--explain-match", explain, "emit the generated match queries");

  CLI::App* kb_cmd = app.add_subcommand("kb", "knowledge base utilities");
  kb_cmd->require_subcommand(1);
  std::string stats_path;
  CLI::App* kb_stats_cmd = kb_cmd->add_subcommand("stats", "print knowledge base statistics");
  kb_stats_cmd->add_option("kb", stats_path, "knowledge base file")->required();
  std::vector<std::string> merge_inputs;
  std::string merge_out;
  CLI::App* kb_merge_cmd = kb_cmd->add_subcommand("merge", "merge knowledge bases");
  kb_merge_cmd->add_option("--out", merge_out, "merged output file")->required();
  kb_merge_cmd->add_option("inputs", merge_inputs, "input knowledge bases")->required()->expected(-2);

  CLI::App* bench = app.add_subcommand("bench", "desk-scale scalability measurements");
  bench->add_option("--suite", suite, "learning | matching | routinization | all")->default_val("all");
  bench->add_option("--out", bench_out, "output TSV path");
  bench->add_option("--seed", args.seed, "master seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // 0 for --help/--version, 1 for every usage mistake.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (learn->parsed()) return run_learn(args, timestamp, guidelines_dir);
    if (reopt->parsed()) return run_reoptimize(args, verify, explain, out_dir);
    if (match->parsed()) return run_match(args, explain);
    if (kb_stats_cmd->parsed()) {
      std::cout << kb_stats(load_kb_file(stats_path));
      return 0;
    }
    if (kb_merge_cmd->parsed()) {
      KnowledgeBase merged = load_kb_file(merge_inputs.front());
      for (size_t i = 1; i < merge_inputs.size(); ++i)
        merged = merge_kb(merged, load_kb_file(merge_inputs[i]));
      save_kb_file(merged, merge_out);
      std::cout << "templates\t" << merged.templates.size() << "\n";
      return 0;
    }
    if (bench->parsed()) return run_bench(suite, bench_out, args.seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Internal ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
