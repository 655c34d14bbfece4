#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gwm/encoding.hpp"
#include "gwm/hierarchy.hpp"

namespace gwm {

/// mt19937_64 with its own integer reduction, so a seed gives the same
/// stream on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  /// Uniform in [0, 1).
  double unit();

private:
  std::mt19937_64 engine_;
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::size_t per_node = 100;
  std::size_t max_repeat = 5;  // upper bound on each starred repetition
  std::size_t attempts_per_string = 200;
};

/// A random non-empty word of the expression's language.
std::string random_member(const PatternExpr& expr, Rng& rng, std::size_t max_repeat);

struct GeneratedString {
  NodeId node = 0;
  std::string text;
};

/// For every node, up to `per_node` words whose deepest container is that
/// node. Nodes every sample of which lands deeper get fewer (possibly none).
std::vector<GeneratedString> generate_strings(const Hierarchy& hierarchy, const GeneratorConfig& config);

enum class PartitionStrategy { kHalves = 2, kThirds = 3, kQuarters = 4 };

std::string to_string(PartitionStrategy s);
PartitionStrategy parse_partition_strategy(const std::string& s);

/// Dataset with outcomes planted per group of nodes.
///
/// Each planted node owns every descendant not claimed by an earlier planted
/// node; everything else belongs to the root. Each group gets its own
/// constant outcome, so synthesis should keep exactly the planted nodes and
/// the root.
struct Scenario {
  Dataset data;
  std::vector<NodeId> generator_of_row;
  std::vector<NodeId> planted;             // planted nodes, in choice order
  std::vector<std::size_t> group_of_node;  // 0 is the root's group
  std::vector<double> group_outcome;
  std::vector<NodeId> expected_trocs;  // root plus planted, ascending
};

Scenario planted_partition_scenario(const Hierarchy& hierarchy, PartitionStrategy strategy,
                                    const GeneratorConfig& config);

/// One planted node; chosen at random among populated non-root nodes unless given.
Scenario planted_regex_scenario(const Hierarchy& hierarchy, const GeneratorConfig& config,
                                std::optional<NodeId> target = {});

/// Same two constructions over strings generated beforehand, so several
/// scenarios can share one (expensive) generation pass.
Scenario plant_partition(const Hierarchy& hierarchy, const std::vector<GeneratedString>& strings,
                         PartitionStrategy strategy, std::uint64_t seed);
Scenario plant_regex(const Hierarchy& hierarchy, const std::vector<GeneratedString>& strings, std::uint64_t seed,
                     std::optional<NodeId> target = {});

/// Planted nodes, expected TrOCs and group outcomes as JSON.
std::string scenario_expectations_json(const Scenario& s, const Hierarchy& hierarchy);

}  // namespace gwm
