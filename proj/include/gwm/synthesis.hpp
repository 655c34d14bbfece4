#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwm/encoding.hpp"
#include "gwm/hierarchy.hpp"
#include "gwm/stats.hpp"

namespace gwm {

enum class Correction { kBonferroni, kNone };

/// Pluggable two-sample test; the default is mann_whitney.
using TwoSampleTest = std::function<TestResult(const ValueCounts&, const ValueCounts&, double alpha)>;

struct SynthesisConfig {
  double alpha = 0.05;
  Correction correction = Correction::kBonferroni;
  /// Outcome threshold for the odds ratio; pooled median of the pair when unset.
  std::optional<double> dichotomize_threshold;
  /// Odds-ratio differences below this are not decisive when ordering merges.
  double decisive_or_delta = 1.0;
  TwoSampleTest test;  // empty means mann_whitney

  void validate() const;
};

/// Injected verdicts for node pairs, consulted before the statistical test.
/// Used for golden-trace replay and unit tests.
class TestOracle {
public:
  struct Verdict {
    bool rejected = false;
    double p_value = 1.0;
  };

  void set(const std::string& a, const std::string& b, Verdict v);
  std::optional<Verdict> lookup(const std::string& a, const std::string& b) const;
  bool empty() const noexcept { return pairs_.empty(); }
  const std::map<std::pair<std::string, std::string>, Verdict>& pairs() const noexcept { return pairs_; }

  /// `{"pairs": [{"a": "ML", "b": "(ML)*", "verdict": "insignificant", "p": 0.025}]}`
  static TestOracle from_json(const std::string& text);

private:
  std::map<std::pair<std::string, std::string>, Verdict> pairs_;
};

enum class SelectionReason {
  kNoSiblings,
  kOneParent,
  kMostUnrejected,
  kDfsLeastSignificant,
  kSiblingOfInsignificant,
  kUndecidedCandidate,
  kFinalCheck,
};

enum class Relation { kParent, kSibling };

enum class Action { kKeep, kMerge, kCheckSiblings, kDefer, kReopen };

std::string to_string(SelectionReason r);
std::string to_string(Relation r);
std::string to_string(Action a);

struct PairTest {
  NodeId other = 0;
  Relation relation = Relation::kParent;
  TestResult result;  // u is oriented with the evaluated node as the first sample
};

struct MergeRecord {
  NodeId node = 0;
  NodeId into = 0;
  std::size_t moved = 0;
  std::vector<NodeId> transmitted;  // decided children re-opened under a new parent
};

struct TraceEvent {
  std::size_t step = 0;
  NodeId node = 0;
  int depth = 0;
  SelectionReason reason = SelectionReason::kNoSiblings;
  std::size_t members = 0;
  std::vector<PairTest> tests;
  bool significant = false;
  bool degenerate = false;
  Action action = Action::kKeep;
  std::optional<MergeRecord> merge;
};

struct OutcomeSummary {
  std::size_t count = 0;
  double share = 0.0;  // percent of the dataset
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

OutcomeSummary summarize(std::span<const double> outcomes, std::size_t dataset_size);

struct Troc {
  NodeId node = 0;
  std::string pattern;
  std::vector<std::size_t> rows;  // ascending dataset rows
  OutcomeSummary summary;
};

struct TrocSet {
  std::vector<Troc> trocs;  // in node id order
  std::vector<TraceEvent> trace;
  /// Final structure: parents of every surviving node (empty for merged ones).
  std::vector<std::vector<NodeId>> active_parents;
  std::vector<bool> active;
  std::size_t dataset_size = 0;

  const Troc* find(NodeId node) const;
};

/// Runs the synthesis over a classified dataset. Deterministic: identical
/// inputs give identical traces.
TrocSet synthesize(const Hierarchy& hierarchy, const Classification& classification, const Dataset& data,
                   const SynthesisConfig& config, const TestOracle* oracle = nullptr);

struct Violation {
  int condition = 0;  // 1..4
  std::string detail;
};

/// A surviving parent-child or sibling pair as re-tested by the checker.
struct AdjacentPair {
  NodeId a = 0;  // parent, or the smaller sibling
  NodeId b = 0;
  Relation relation = Relation::kParent;
  bool tested = false;  // false when a side has fewer than two members
  bool from_oracle = false;
  TestResult result;  // adjusted under the child's family; siblings take the larger of both families
};

struct ContractReport {
  std::vector<Violation> violations;
  std::vector<AdjacentPair> pairs;
  std::vector<std::string> notes;  // pairs that could not be tested
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks that every row lies in exactly one TrOC, patterns are distinct,
/// and every surviving sibling pair and parent-child pair rejects H0.
ContractReport verify_output_contract(const TrocSet& trocs, const Hierarchy& hierarchy, const Dataset& data,
                                      const SynthesisConfig& config, const TestOracle* oracle = nullptr);

std::string trace_to_jsonl(const TrocSet& trocs, const Hierarchy& hierarchy);
std::string trocs_to_json(const TrocSet& trocs);
std::string trocs_to_csv(const TrocSet& trocs);

}  // namespace gwm
