#include "gwm/testgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "gwm/error.hpp"

namespace gwm {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("Rng::below needs a positive bound");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::string random_member(const PatternExpr& expr, Rng& rng, std::size_t max_repeat) {
  if (max_repeat == 0) throw Error("max_repeat must be positive");
  for (;;) {
    std::string out;
    const auto rounds = expr.outer_starred() ? rng.between(1, max_repeat) : 1;
    for (std::uint64_t r = 0; r < rounds; ++r)
      for (const auto& atom : expr.atoms()) {
        const auto times = atom.starred ? rng.between(0, max_repeat) : 1;
        out.append(times, atom.symbol);
      }
    if (!out.empty()) return out;
  }
}

std::vector<GeneratedString> generate_strings(const Hierarchy& hierarchy, const GeneratorConfig& config) {
  if (config.per_node == 0) throw Error("per_node must be positive");
  Rng rng(config.seed);
  std::unordered_map<std::string, NodeId> memo;
  auto classify = [&](const std::string& s) {
    auto key = cap_runs(s);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const auto node = hierarchy.classify(key);
    memo.emplace(std::move(key), node);
    return node;
  };

  std::vector<GeneratedString> out;
  const std::size_t budget = config.per_node * config.attempts_per_string;
  // Give up early on nodes whose samples always land deeper.
  const std::size_t probe = std::min<std::size_t>(budget, 20 * config.attempts_per_string);
  for (const auto& node : hierarchy.nodes()) {
    std::size_t found = 0;
    for (std::size_t attempt = 0; attempt < budget && found < config.per_node; ++attempt) {
      if (found == 0 && attempt >= probe) break;
      auto s = random_member(node.expr, rng, config.max_repeat);
      if (classify(s) != node.id) continue;
      out.push_back({node.id, std::move(s)});
      ++found;
    }
  }
  return out;
}

std::string to_string(PartitionStrategy s) {
  switch (s) {
    case PartitionStrategy::kHalves: return "halves";
    case PartitionStrategy::kThirds: return "thirds";
    case PartitionStrategy::kQuarters: return "quarters";
  }
  return "unknown";
}

PartitionStrategy parse_partition_strategy(const std::string& s) {
  if (s == "halves") return PartitionStrategy::kHalves;
  if (s == "thirds") return PartitionStrategy::kThirds;
  if (s == "quarters") return PartitionStrategy::kQuarters;
  throw Error("unknown partition strategy '" + s + "' (halves, thirds, quarters)");
}

namespace {

// Assigns groups from the planted nodes and builds the dataset.
Scenario build(const Hierarchy& h, const std::vector<GeneratedString>& strings, std::vector<NodeId> planted) {
  Scenario sc;
  sc.planted = planted;
  sc.group_of_node.assign(h.size(), 0);
  std::vector<bool> claimed(h.size(), false);
  for (std::size_t g = 0; g < planted.size(); ++g)
    for (NodeId v = 0; v < h.size(); ++v)
      if (!claimed[v] && (v == planted[g] || h.is_ancestor(planted[g], v))) {
        claimed[v] = true;
        sc.group_of_node[v] = g + 1;
      }
  for (std::size_t g = 0; g <= planted.size(); ++g) sc.group_outcome.push_back(1.0 + static_cast<double>(g));

  sc.data = Dataset(h.alphabet());
  std::size_t row = 0;
  for (const auto& gs : strings) {
    char id[32];
    std::snprintf(id, sizeof id, "s%07zu", row++);
    sc.data.add({id, gs.text}, sc.group_outcome[sc.group_of_node[gs.node]]);
    sc.generator_of_row.push_back(gs.node);
  }
  sc.expected_trocs = planted;
  sc.expected_trocs.push_back(h.root());
  std::sort(sc.expected_trocs.begin(), sc.expected_trocs.end());
  return sc;
}

std::vector<std::size_t> population(const Hierarchy& h, const std::vector<GeneratedString>& strings) {
  std::vector<std::size_t> pop(h.size(), 0);
  for (const auto& s : strings) ++pop[s.node];
  return pop;
}

}  // namespace

Scenario planted_partition_scenario(const Hierarchy& hierarchy, PartitionStrategy strategy,
                                    const GeneratorConfig& config) {
  return plant_partition(hierarchy, generate_strings(hierarchy, config), strategy, config.seed);
}

Scenario planted_regex_scenario(const Hierarchy& hierarchy, const GeneratorConfig& config,
                                std::optional<NodeId> target) {
  return plant_regex(hierarchy, generate_strings(hierarchy, config), config.seed, target);
}

Scenario plant_partition(const Hierarchy& hierarchy, const std::vector<GeneratedString>& strings,
                         PartitionStrategy strategy, std::uint64_t seed) {
  const auto pop = population(hierarchy, strings);
  const auto parts = static_cast<std::size_t>(strategy);
  const double share = static_cast<double>(strings.size()) / static_cast<double>(parts);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<NodeId> planted;
  std::vector<bool> claimed(hierarchy.size(), false);
  std::size_t unclaimed_total = strings.size();
  for (std::size_t part = 1; part < parts; ++part) {
    // Unclaimed population below every candidate.
    std::vector<std::size_t> below(hierarchy.size(), 0);
    for (NodeId v = 0; v < hierarchy.size(); ++v) {
      if (claimed[v] || pop[v] == 0) continue;
      below[v] += pop[v];
      for (auto a : hierarchy.ancestors(v)) below[a] += pop[v];
    }
    std::vector<std::pair<double, NodeId>> scored;
    for (NodeId v = 1; v < hierarchy.size(); ++v) {
      if (claimed[v] || pop[v] == 0) continue;
      bool comparable = false;
      for (auto p : planted)
        if (hierarchy.is_ancestor(v, p) || hierarchy.is_ancestor(p, v)) comparable = true;
      // The root's group must stay populated.
      if (comparable || below[v] + pop[0] >= unclaimed_total) continue;
      scored.emplace_back(std::abs(static_cast<double>(below[v]) - share), v);
    }
    if (scored.empty())
      throw Error("hierarchy too small for a " + to_string(strategy) + " partition");
    std::sort(scored.begin(), scored.end());
    // Random pick among the best-balanced few.
    std::size_t pool = 1;
    while (pool < scored.size() && pool < 5 && scored[pool].first <= scored[0].first * 1.25 + 1.0) ++pool;
    const NodeId pick = scored[rng.below(pool)].second;
    planted.push_back(pick);
    for (NodeId v = 0; v < hierarchy.size(); ++v)
      if (!claimed[v] && (v == pick || hierarchy.is_ancestor(pick, v))) {
        claimed[v] = true;
        unclaimed_total -= pop[v];
      }
  }
  return build(hierarchy, strings, planted);
}

Scenario plant_regex(const Hierarchy& hierarchy, const std::vector<GeneratedString>& strings, std::uint64_t seed,
                     std::optional<NodeId> target) {
  const auto pop = population(hierarchy, strings);
  // Strings left for the root's group once v and everything below it is planted.
  auto outside = [&](NodeId v) {
    std::size_t n = 0;
    for (NodeId u = 0; u < hierarchy.size(); ++u)
      if (u != v && !hierarchy.is_ancestor(v, u)) n += pop[u];
    return n;
  };
  if (target) {
    if (*target == hierarchy.root() || *target >= hierarchy.size())
      throw Error("planted target must be a non-root node");
    if (pop[*target] == 0) throw Error("planted target " + hierarchy.node(*target).text + " has no generated strings");
    if (outside(*target) == 0) throw Error("nothing outside " + hierarchy.node(*target).text + " is populated");
  } else {
    std::vector<NodeId> candidates;
    for (NodeId v = 1; v < hierarchy.size(); ++v)
      if (pop[v] > 0 && outside(v) > 0) candidates.push_back(v);
    if (candidates.empty()) throw Error("no populated node to plant");
    Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    target = candidates[rng.below(candidates.size())];
  }
  return build(hierarchy, strings, {*target});
}

std::string scenario_expectations_json(const Scenario& s, const Hierarchy& hierarchy) {
  nlohmann::json planted = nlohmann::json::array(), expected = nlohmann::json::array();
  for (auto v : s.planted) planted.push_back(hierarchy.node(v).text);
  for (auto v : s.expected_trocs) expected.push_back(hierarchy.node(v).text);
  return nlohmann::json{{"rows", s.data.size()},
                        {"planted", planted},
                        {"expected_trocs", expected},
                        {"group_outcome", s.group_outcome}}
             .dump(2) +
         "\n";
}

}  // namespace gwm
