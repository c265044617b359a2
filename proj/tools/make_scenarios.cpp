// Regenerates the bundled scenario files from the built-in generators.
// The test suite asserts the files and generators agree, so run this after
// changing anything in src/scenario.cpp:
//
//   ./build/tools/replan-make-scenarios scenarios

#include <cstdio>

#include "replan/scenario.hpp"
#include "replan/util.hpp"

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "scenarios";
  std::vector<replan::Scenario> all = replan::motif_scenarios();
  all.push_back(replan::combined_scenario());
  for (const replan::Scenario& s : all) {
    replan::write_file_atomic(dir + "/" + s.name + ".catalog", serialize_catalog(s.catalog));
    replan::write_file_atomic(dir + "/" + s.name + ".workload", serialize_workload(s.workload));
    std::printf("%s/%s.{catalog,workload}\n", dir.c_str(), s.name.c_str());
  }
  return 0;
}
