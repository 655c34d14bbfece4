#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gwm/hierarchy.hpp"
#include "gwm/synthesis.hpp"

namespace fixture {

// Six-node hierarchy over {M, L} with hand-placed members and injected verdicts.
struct MlSample {
  gwm::Hierarchy hierarchy;
  gwm::Dataset data;
  gwm::TestOracle oracle;
};

inline gwm::Hierarchy ml_hierarchy() {
  const gwm::Alphabet ml("ML");
  std::vector<gwm::PatternExpr> ex;
  for (auto t : {"(M*L*)*", "(M*L)*", "M*L*", "M*L", "(ML)*", "ML"}) ex.push_back(gwm::PatternExpr::parse(t));
  return gwm::Hierarchy::from_edges(ml, ex, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {1, 4}, {4, 5}, {3, 5}});
}

inline MlSample ml_sample() {
  MlSample a{ml_hierarchy(), gwm::Dataset(gwm::Alphabet("ML")), {}};
  // One representative string per node, each classifying to that node.
  const std::pair<const char*, int> groups[] = {{"ML", 22},   {"MLML", 112}, {"MML", 154},
                                                {"LML", 56},  {"MM", 102},   {"LLM", 281}};
  int id = 0;
  for (const auto& [s, n] : groups)
    for (int i = 0; i < n; ++i) a.data.add({"r" + std::to_string(id++), s}, 1.0);
  auto set = [&](const char* x, const char* y, bool rejected, double p) { a.oracle.set(x, y, {rejected, p}); };
  set("ML", "(ML)*", false, 0.025);
  set("ML", "M*L", false, 0.020);
  set("(ML)*", "(M*L)*", false, 0.3);
  set("(ML)*", "M*L", true, 0.001);
  set("M*L", "(M*L)*", true, 0.001);
  set("M*L", "M*L*", true, 0.001);
  set("(M*L)*", "(M*L*)*", false, 0.008);
  set("M*L*", "(M*L*)*", false, 0.006);
  set("(M*L)*", "M*L*", true, 0.001);
  set("M*L", "(M*L*)*", true, 0.001);
  return a;
}

struct ExpectedStep {
  const char* node;
  const char* reason;
  const char* action;
  const char* merged;  // node merged at this step, or nullptr
  const char* into;
};

// Selection order and merge actions of the seven steps.
inline const std::vector<ExpectedStep>& ml_sample_steps() {
  static const std::vector<ExpectedStep> steps{
      {"ML", "no-siblings", "merge", "ML", "(ML)*"},
      {"(ML)*", "one-parent", "check-siblings", nullptr, nullptr},
      {"M*L", "sibling-of-insignificant", "keep", "(ML)*", "(M*L)*"},
      {"(M*L)*", "one-parent", "check-siblings", nullptr, nullptr},
      {"M*L*", "sibling-of-insignificant", "defer", "(M*L)*", "(M*L*)*"},
      {"M*L*", "undecided-candidate", "merge", "M*L*", "(M*L*)*"},
      {"M*L", "no-siblings", "keep", nullptr, nullptr},
  };
  return steps;
}

}  // namespace fixture
