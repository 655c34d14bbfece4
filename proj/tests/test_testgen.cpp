#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gwm/error.hpp"
#include "gwm/hierarchy.hpp"
#include "gwm/synthesis.hpp"
#include "gwm/testgen.hpp"
#include "oracles.hpp"

using namespace gwm;

namespace {

const Hierarchy& hier(const std::string& symbols) {
  static std::map<std::string, Hierarchy> cache;
  auto it = cache.find(symbols);
  if (it == cache.end()) it = cache.emplace(symbols, Hierarchy::enumerate(Alphabet(symbols))).first;
  return it->second;
}

NodeId node_of(const Hierarchy& h, const std::string& text) {
  for (const auto& n : h.nodes())
    if (n.text == text) return n.id;
  FAIL("no node " << text);
  return 0;
}

std::set<NodeId> survivor_ids(const TrocSet& t) {
  std::set<NodeId> out;
  for (const auto& x : t.trocs) out.insert(x.node);
  return out;
}

}  // namespace

TEST_SUITE("testgen") {
  TEST_CASE("A*B with bound 3 stays among B, AB, AAB, AAAB") {
    const auto expr = PatternExpr::parse("A*B");
    Rng rng(11);
    std::set<std::string> seen;
    for (int i = 0; i < 400; ++i) seen.insert(random_member(expr, rng, 3));
    CHECK(seen == std::set<std::string>{"B", "AB", "AAB", "AAAB"});
  }

  TEST_CASE("a star-free node only yields itself") {
    const auto expr = PatternExpr::parse("AB");
    Rng rng(5);
    for (int i = 0; i < 50; ++i) CHECK(random_member(expr, rng, 5) == "AB");
  }

  TEST_CASE("outer star repeats the body at least once") {
    const auto expr = PatternExpr::parse("(AB)*");
    Rng rng(2);
    std::set<std::string> seen;
    for (int i = 0; i < 300; ++i) seen.insert(random_member(expr, rng, 3));
    CHECK(seen == std::set<std::string>{"AB", "ABAB", "ABABAB"});
  }

  TEST_CASE("zero bound is rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(random_member(PatternExpr::parse("A*"), rng, 0), Error);
  }

  TEST_CASE("soundness: every generated string matches its expression") {
    for (const auto* symbols : {"AB", "ABC"}) {
      const auto& h = hier(symbols);
      GeneratorConfig cfg;
      cfg.per_node = 5;
      cfg.seed = 9;
      for (const auto& gs : generate_strings(h, cfg)) {
        CHECK(oracle::regex_matches(h.node(gs.node).text, gs.text));
        CHECK(h.classify(gs.text) == gs.node);
      }
    }
  }

  TEST_CASE("seeded determinism") {
    GeneratorConfig cfg;
    cfg.per_node = 10;
    cfg.seed = 77;
    const auto a = generate_strings(hier("ABC"), cfg);
    const auto b = generate_strings(hier("ABC"), cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].node == b[i].node);
      CHECK(a[i].text == b[i].text);
    }
    cfg.seed = 78;
    const auto c = generate_strings(hier("ABC"), cfg);
    bool differs = c.size() != a.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].text != c[i].text;
    CHECK(differs);
  }

  TEST_CASE("strategy names") {
    CHECK(parse_partition_strategy("thirds") == PartitionStrategy::kThirds);
    CHECK(to_string(PartitionStrategy::kQuarters) == "quarters");
    CHECK_THROWS_AS(parse_partition_strategy("fifths"), Error);
  }

  TEST_CASE("halves over AB plants two groups and synthesis finds them") {
    GeneratorConfig cfg;
    cfg.seed = 1;
    const auto& h = hier("AB");
    const auto sc = planted_partition_scenario(h, PartitionStrategy::kHalves, cfg);
    REQUIRE(sc.expected_trocs.size() == 2);
    CHECK(std::count(sc.expected_trocs.begin(), sc.expected_trocs.end(), h.root()) == 1);
    // planted groups are closed downward
    for (NodeId v = 0; v < h.size(); ++v)
      for (auto c : h.node(v).children)
        if (sc.group_of_node[v] != 0) CHECK(sc.group_of_node[c] == sc.group_of_node[v]);
    const auto t = synthesize(h, classify_all(h, sc.data), sc.data, SynthesisConfig{});
    CHECK(survivor_ids(t) == std::set<NodeId>(sc.expected_trocs.begin(), sc.expected_trocs.end()));
  }

  TEST_CASE("quarters over ABCD expect four") {
    GeneratorConfig cfg;
    cfg.seed = 4;
    cfg.per_node = 20;
    const auto& h = hier("ABCD");
    const auto sc = planted_partition_scenario(h, PartitionStrategy::kQuarters, cfg);
    CHECK(sc.expected_trocs.size() == 4);
    std::set<double> outcomes(sc.data.outcomes().begin(), sc.data.outcomes().end());
    CHECK(outcomes.size() == 4);
    const auto t = synthesize(h, classify_all(h, sc.data), sc.data, SynthesisConfig{});
    CHECK(survivor_ids(t) == std::set<NodeId>(sc.expected_trocs.begin(), sc.expected_trocs.end()));
  }

  TEST_CASE("regex target (AB)* is recovered") {
    GeneratorConfig cfg;
    cfg.seed = 3;
    const auto& h = hier("AB");
    const auto target = node_of(h, "(AB)*");
    const auto sc = planted_regex_scenario(h, cfg, target);
    CHECK(sc.planted == std::vector<NodeId>{target});
    const auto t = synthesize(h, classify_all(h, sc.data), sc.data, SynthesisConfig{});
    CHECK(survivor_ids(t) == std::set<NodeId>{h.root(), target});
  }

  TEST_CASE("the root cannot be a target") {
    GeneratorConfig cfg;
    cfg.per_node = 5;
    CHECK_THROWS_AS(planted_regex_scenario(hier("AB"), cfg, hier("AB").root()), Error);
  }

  TEST_CASE("without a shift the target merges away") {
    GeneratorConfig cfg;
    cfg.seed = 6;
    const auto& h = hier("AB");
    const auto sc = planted_regex_scenario(h, cfg, node_of(h, "A*B"));
    Dataset flat(h.alphabet());
    for (std::size_t r = 0; r < sc.data.size(); ++r) flat.add(sc.data.itemset(r), 1.0);
    const auto t = synthesize(h, classify_all(h, flat), flat, SynthesisConfig{});
    CHECK(survivor_ids(t) == std::set<NodeId>{h.root()});
  }

  TEST_CASE("expectations JSON names the planted nodes") {
    GeneratorConfig cfg;
    cfg.per_node = 10;
    const auto& h = hier("AB");
    const auto sc = planted_regex_scenario(h, cfg, node_of(h, "A*B"));
    const auto json = scenario_expectations_json(sc, h);
    CHECK(json.find("\"A*B\"") != std::string::npos);
    CHECK(json.find("\"(A*B*)*\"") != std::string::npos);
  }
}
