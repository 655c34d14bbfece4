#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gwm/error.hpp"
#include "gwm/synthesis.hpp"
#include "gwm/testgen.hpp"
#include "oracles.hpp"

using namespace gwm;

namespace {

const TraceEvent* first_event_of(const TrocSet& t, const Hierarchy& h, const std::string& text) {
  for (const auto& e : t.trace)
    if (h.node(e.node).text == text) return &e;
  return nullptr;
}

std::set<std::string> survivors(const TrocSet& t) {
  std::set<std::string> out;
  for (const auto& x : t.trocs) out.insert(x.pattern);
  return out;
}

// Replays the merges of a trace over the initial classification and checks
// that members always move whole, upward, and end where the TrocSet says.
void check_replay(const Hierarchy& h, const Classification& cls, const TrocSet& t, std::size_t rows) {
  std::vector<std::vector<std::size_t>> members = cls.members;
  std::vector<bool> merged(h.size(), false);
  auto check_partition = [&] {
    std::vector<int> seen(rows, 0);
    for (const auto& m : members)
      for (auto r : m) ++seen[r];
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  };
  for (const auto& e : t.trace) {
    if (e.merge) {
      const auto& m = *e.merge;
      CHECK(h.is_ancestor(m.into, m.node));
      CHECK_FALSE(merged[m.into]);
      CHECK(m.moved == members[m.node].size());
      members[m.into].insert(members[m.into].end(), members[m.node].begin(), members[m.node].end());
      members[m.node].clear();
      merged[m.node] = true;
    }
    REQUIRE(check_partition());
  }
  for (const auto& troc : t.trocs) {
    auto got = members[troc.node];
    std::sort(got.begin(), got.end());
    CHECK(got == troc.rows);
    CHECK_FALSE(merged[troc.node]);
  }
}

Dataset random_dataset(const Hierarchy& h, std::uint64_t seed, std::size_t rows, int groups) {
  std::mt19937_64 rng(seed);
  Dataset d(h.alphabet());
  std::vector<double> shift(h.size());
  for (auto& s : shift) s = static_cast<double>(rng() % static_cast<std::uint64_t>(groups));
  const auto& symbols = h.alphabet().symbols();
  for (std::size_t i = 0; i < rows; ++i) {
    std::string s;
    const auto len = 1 + rng() % 8;
    for (std::uint64_t j = 0; j < len; ++j) s += symbols[rng() % symbols.size()];
    const auto v = h.classify(s);
    const double noise = static_cast<double>(rng() % 1000) / 1000.0;
    d.add({"r" + std::to_string(i), s}, shift[v] * 3 + noise);
  }
  return d;
}

// Exact permutation p when the split count is small, else a seeded Monte Carlo estimate.
TestResult permutation_test(const ValueCounts& a, const ValueCounts& b, double alpha) {
  TestResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  if (a.size() < 2 || b.size() < 2) return r;
  const auto xs = a.expand(), ys = b.expand();
  r.u = oracle::u_statistic(xs, ys);
  if (oracle::choose(xs.size() + ys.size(), xs.size()) <= 200000) {
    r.p_value = oracle::mann_whitney_permutation_p(xs, ys);
    r.method = TestMethod::kExact;
  } else {
    std::vector<double> pooled(xs);
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    const double centre = static_cast<double>(xs.size() * ys.size()) / 2;
    const double observed = std::abs(r.u - centre);
    std::mt19937_64 rng(12345);
    std::size_t extreme = 1;
    const std::size_t draws = 20000;
    for (std::size_t i = 0; i < draws; ++i) {
      std::shuffle(pooled.begin(), pooled.end(), rng);
      const std::vector<double> pa(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(xs.size()));
      const std::vector<double> pb(pooled.begin() + static_cast<std::ptrdiff_t>(xs.size()), pooled.end());
      extreme += std::abs(oracle::u_statistic(pa, pb) - centre) >= observed - 1e-9;
    }
    r.p_value = static_cast<double>(extreme) / static_cast<double>(draws + 1);
    r.method = TestMethod::kNormalApproximation;
  }
  r.adjusted_p = r.p_value;
  r.rejected = r.p_value < alpha;
  return r;
}

std::vector<bool> verdicts(const TrocSet& t) {
  std::vector<bool> out;
  for (const auto& e : t.trace)
    for (const auto& test : e.tests) out.push_back(test.result.rejected);
  return out;
}

}  // namespace

TEST_SUITE("synthesis") {
  TEST_CASE("six-node trace with injected verdicts") {
    const auto a = fixture::ml_sample();
    const auto cls = classify_all(a.hierarchy, a.data);
    const auto t = synthesize(a.hierarchy, cls, a.data, SynthesisConfig{}, &a.oracle);
    const auto& want = fixture::ml_sample_steps();
    REQUIRE(t.trace.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      const auto& e = t.trace[i];
      INFO("step " << i + 1);
      CHECK(e.step == i + 1);
      CHECK(a.hierarchy.node(e.node).text == want[i].node);
      CHECK(to_string(e.reason) == want[i].reason);
      CHECK(to_string(e.action) == want[i].action);
      if (want[i].merged) {
        REQUIRE(e.merge.has_value());
        CHECK(a.hierarchy.node(e.merge->node).text == want[i].merged);
        CHECK(a.hierarchy.node(e.merge->into).text == want[i].into);
      } else {
        CHECK_FALSE(e.merge.has_value());
      }
    }
    CHECK(survivors(t) == std::set<std::string>{"(M*L*)*", "M*L"});
    // The merge of M*L* hands M*L to the root.
    REQUIRE(t.trace[5].merge.has_value());
    REQUIRE(t.trace[5].merge->transmitted.size() == 1);
    CHECK(a.hierarchy.node(t.trace[5].merge->transmitted[0]).text == "M*L");

    const auto contract = verify_output_contract(t, a.hierarchy, a.data, SynthesisConfig{}, &a.oracle);
    CHECK(contract.ok());
    check_replay(a.hierarchy, cls, t, a.data.size());
  }

  TEST_CASE("one outcome distribution leaves only the root") {
    const auto h = Hierarchy::enumerate(Alphabet("AB"));
    GeneratorConfig g;
    g.per_node = 20;
    const auto strings = generate_strings(h, g);
    Dataset d(h.alphabet());
    for (std::size_t i = 0; i < strings.size(); ++i) d.add({"s" + std::to_string(i), strings[i].text}, 3.0);
    const auto cls = classify_all(h, d);
    const auto t = synthesize(h, cls, d, SynthesisConfig{});
    REQUIRE(t.trocs.size() == 1);
    CHECK(t.trocs[0].node == h.root());
    CHECK(t.trocs[0].rows.size() == d.size());
    check_replay(h, cls, t, d.size());
  }

  TEST_CASE("planted halves over two letters give two TrOCs") {
    const auto h = Hierarchy::enumerate(Alphabet("AB"));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      GeneratorConfig g;
      g.seed = seed;
      const auto sc = planted_partition_scenario(h, PartitionStrategy::kHalves, g);
      const auto cls = classify_all(h, sc.data);
      const auto t = synthesize(h, cls, sc.data, SynthesisConfig{});
      std::vector<NodeId> got;
      for (const auto& x : t.trocs) got.push_back(x.node);
      CHECK(got == sc.expected_trocs);
      check_replay(h, cls, t, sc.data.size());
    }
  }

  TEST_CASE("a node failing one test merges even when another rejects") {
    // (A*B*)* > A*B* > {AB*, A*B}
    const Alphabet ab("AB");
    std::vector<PatternExpr> ex;
    for (auto s : {"(A*B*)*", "A*B*", "A*B", "AB*"}) ex.push_back(PatternExpr::parse(s));
    const auto h = Hierarchy::from_edges(ab, ex, {{0, 1}, {1, 2}, {1, 3}});
    Dataset d(ab);
    int id = 0;
    for (auto s : {"BA", "BA", "AABB", "AABB", "AAB", "AAB", "ABB", "ABB"}) d.add({"r" + std::to_string(id++), s}, 1);
    TestOracle o;
    o.set("A*B", "A*B*", {false, 0.30});
    o.set("A*B", "AB*", {true, 0.01});
    o.set("AB*", "A*B*", {true, 0.01});
    o.set("A*B*", "(A*B*)*", {true, 0.01});
    const auto t = synthesize(h, classify_all(h, d), d, SynthesisConfig{}, &o);
    bool merged = false;
    for (const auto& e : t.trace)
      if (e.merge && h.node(e.merge->node).text == "A*B") {
        CHECK(h.node(e.merge->into).text == "A*B*");
        merged = true;
      }
    CHECK(merged);
    CHECK(survivors(t) == std::set<std::string>{"(A*B*)*", "A*B*", "AB*"});
  }

  TEST_CASE("two failing parents: merge into the higher p") {
    const auto h = fixture::ml_hierarchy();
    Dataset d(h.alphabet());
    int id = 0;
    for (auto s : {"MML", "MML", "LML", "LML", "MM", "MM", "LLM", "LLM"}) d.add({"r" + std::to_string(id++), s}, 1);
    TestOracle o;
    o.set("M*L", "(M*L)*", {false, 0.20});
    o.set("M*L", "M*L*", {false, 0.40});
    o.set("(M*L)*", "M*L*", {true, 0.001});
    o.set("(M*L)*", "(M*L*)*", {true, 0.001});
    o.set("M*L*", "(M*L*)*", {true, 0.001});
    const auto t = synthesize(h, classify_all(h, d), d, SynthesisConfig{}, &o);
    const MergeRecord* rec = nullptr;
    for (const auto& e : t.trace)
      if (e.merge && h.node(e.merge->node).text == "M*L") rec = &*e.merge;
    REQUIRE(rec != nullptr);
    CHECK(h.node(rec->into).text == "M*L*");
  }

  TEST_CASE("a node whose tests all reject is kept") {
    const auto h = fixture::ml_hierarchy();
    Dataset d(h.alphabet());
    int id = 0;
    for (auto s : {"MML", "MML", "LML", "LML", "MM", "MM", "LLM", "LLM"}) d.add({"r" + std::to_string(id++), s}, 1);
    TestOracle o;
    for (auto [x, y] : {std::pair{"M*L", "(M*L)*"}, {"M*L", "M*L*"}, {"(M*L)*", "M*L*"}, {"(M*L)*", "(M*L*)*"},
                        {"M*L*", "(M*L*)*"}})
      o.set(x, y, {true, 0.001});
    const auto t = synthesize(h, classify_all(h, d), d, SynthesisConfig{}, &o);
    const auto* first = first_event_of(t, h, "M*L");
    REQUIRE(first != nullptr);
    CHECK(to_string(first->action) == "keep");
    CHECK(survivors(t) == std::set<std::string>{"(M*L*)*", "(M*L)*", "M*L*", "M*L"});
  }

  TEST_CASE("degenerate nodes merge without testing") {
    const auto h = fixture::ml_hierarchy();
    Dataset d(h.alphabet());
    d.add({"a", "ML"}, 1);
    for (int i = 0; i < 6; ++i) d.add({"b" + std::to_string(i), "LLM"}, i);
    const auto t = synthesize(h, classify_all(h, d), d, SynthesisConfig{});
    const auto& first = t.trace.front();
    CHECK(h.node(first.node).text == "ML");
    CHECK(first.degenerate);
    CHECK(first.tests.empty());
    REQUIRE(first.merge.has_value());
    CHECK(h.is_ancestor(first.merge->into, first.node));
    CHECK(survivors(t) == std::set<std::string>{"(M*L*)*"});
  }

  TEST_CASE("non-adjacent survivors may look alike") {
    const auto h = fixture::ml_hierarchy();
    Dataset d(h.alphabet());
    int id = 0;
    for (auto s : {"ML", "ML", "MLML", "MLML", "MML", "MML", "LML", "LML", "MM", "MM", "LLM", "LLM"})
      d.add({"r" + std::to_string(id++), s}, 1);
    TestOracle o;
    for (NodeId x = 0; x < h.size(); ++x)
      for (NodeId y = x + 1; y < h.size(); ++y) o.set(h.node(x).text, h.node(y).text, {true, 0.001});
    o.set("ML", "M*L*", {false, 0.9});
    const auto t = synthesize(h, classify_all(h, d), d, SynthesisConfig{}, &o);
    CHECK(t.trocs.size() == 6);
    CHECK(verify_output_contract(t, h, d, SynthesisConfig{}, &o).ok());
  }

  TEST_CASE("contract checker flags broken partitions and duplicates") {
    const auto a = fixture::ml_sample();
    const auto cls = classify_all(a.hierarchy, a.data);
    auto t = synthesize(a.hierarchy, cls, a.data, SynthesisConfig{}, &a.oracle);
    auto bad = t;
    bad.trocs[1].rows.push_back(bad.trocs[0].rows.front());
    auto report = verify_output_contract(bad, a.hierarchy, a.data, SynthesisConfig{}, &a.oracle);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.front().condition == 1);

    bad = t;
    bad.trocs.push_back(bad.trocs[1]);
    bad.trocs.back().rows.clear();
    report = verify_output_contract(bad, a.hierarchy, a.data, SynthesisConfig{}, &a.oracle);
    bool dup = false;
    for (const auto& v : report.violations) dup = dup || v.condition == 2;
    CHECK(dup);
  }

  TEST_CASE("contract checker flags adjacent survivors that do not differ") {
    const auto a = fixture::ml_sample();
    const auto cls = classify_all(a.hierarchy, a.data);
    const auto t = synthesize(a.hierarchy, cls, a.data, SynthesisConfig{}, &a.oracle);
    auto o = a.oracle;
    o.set("M*L", "(M*L*)*", {false, 0.5});
    const auto report = verify_output_contract(t, a.hierarchy, a.data, SynthesisConfig{}, &o);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].condition == 4);
  }

  TEST_CASE("determinism and step bound on random data") {
    for (const char* symbols : {"AB", "ABC"}) {
      const auto h = Hierarchy::enumerate(Alphabet(symbols));
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = random_dataset(h, seed, 600, 3);
        const auto cls = classify_all(h, d);
        const auto t1 = synthesize(h, cls, d, SynthesisConfig{});
        const auto t2 = synthesize(h, cls, d, SynthesisConfig{});
        CHECK(trace_to_jsonl(t1, h) == trace_to_jsonl(t2, h));
        CHECK(trocs_to_json(t1) == trocs_to_json(t2));
        // check-siblings and plain defer events are bookkeeping, not steps
        std::size_t steps = 0;
        for (const auto& e : t1.trace)
          if (e.action == Action::kKeep || e.action == Action::kMerge || e.merge) ++steps;
        CHECK(steps <= 2 * h.size());
        CHECK(verify_output_contract(t1, h, d, SynthesisConfig{}).ok());
        check_replay(h, cls, t1, d.size());
      }
    }
  }

  TEST_CASE("permutation test gives the same survivors when verdicts agree") {
    const auto h = fixture::ml_hierarchy();
    const std::vector<std::string> reps{"LLM", "LML", "MM", "MML", "MLML", "ML"};
    std::size_t agreeing = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      std::mt19937_64 rng(seed);
      Dataset d(h.alphabet());
      std::vector<double> shift(reps.size());
      for (auto& s : shift) s = static_cast<double>(rng() % 2) * 5;
      const std::size_t rows = 24 + rng() % 17;
      for (std::size_t i = 0; i < rows; ++i) {
        const auto k = rng() % reps.size();
        d.add({"r" + std::to_string(i), reps[k]}, shift[k] + static_cast<double>(rng() % 100) / 100.0);
      }
      const auto cls = classify_all(h, d);
      SynthesisConfig base;
      SynthesisConfig perm;
      perm.test = permutation_test;
      const auto t1 = synthesize(h, cls, d, base);
      const auto t2 = synthesize(h, cls, d, perm);
      if (verdicts(t1) != verdicts(t2)) continue;
      ++agreeing;
      CHECK(survivors(t1) == survivors(t2));
    }
    CHECK(agreeing >= 20);
  }

  TEST_CASE("config validation") {
    SynthesisConfig c;
    c.alpha = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("oracle JSON") {
    const auto o = TestOracle::from_json(R"({"pairs": [{"a": "ML", "b": "(ML)*", "verdict": "insignificant", "p": 0.025}]})");
    const auto v = o.lookup("(ML)*", "ML");
    REQUIRE(v.has_value());
    CHECK_FALSE(v->rejected);
    CHECK(v->p_value == 0.025);
    CHECK_THROWS_AS(TestOracle::from_json(R"({"pairs": [{"a": "ML", "b": "M*L", "verdict": "maybe"}]})"), Error);
  }
}
