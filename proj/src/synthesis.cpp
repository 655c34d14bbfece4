#include "gwm/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gwm/csv.hpp"
#include "gwm/error.hpp"
#include "gwm/quantile.hpp"

namespace gwm {

using nlohmann::json;

void SynthesisConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (!(decisive_or_delta >= 0.0) || !std::isfinite(decisive_or_delta))
    throw Error("odds-ratio band must be a finite non-negative number");
  if (dichotomize_threshold && !std::isfinite(*dichotomize_threshold))
    throw Error("dichotomization threshold must be finite");
}

namespace {

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

std::uint64_t pair_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void TestOracle::set(const std::string& a, const std::string& b, Verdict v) {
  if (a == b) throw Error("oracle pair names the same node twice: " + a);
  pairs_[ordered(a, b)] = v;
}

std::optional<TestOracle::Verdict> TestOracle::lookup(const std::string& a, const std::string& b) const {
  auto it = pairs_.find(ordered(a, b));
  if (it == pairs_.end()) return std::nullopt;
  return it->second;
}

TestOracle TestOracle::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("oracle file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array())
    throw Error("oracle file needs a \"pairs\" array");
  TestOracle oracle;
  for (const auto& e : j["pairs"]) {
    if (!e.is_object() || !e.contains("a") || !e.contains("b") || !e.contains("verdict"))
      throw Error("oracle pair needs \"a\", \"b\" and \"verdict\"");
    const auto verdict = e["verdict"].get<std::string>();
    Verdict v;
    if (verdict == "significant")
      v.rejected = true;
    else if (verdict == "insignificant")
      v.rejected = false;
    else
      throw Error("oracle verdict must be \"significant\" or \"insignificant\", got \"" + verdict + "\"");
    v.p_value = e.value("p", v.rejected ? 0.0 : 1.0);
    if (!(v.p_value >= 0.0 && v.p_value <= 1.0)) throw Error("oracle p-value outside [0, 1]");
    oracle.set(e["a"].get<std::string>(), e["b"].get<std::string>(), v);
  }
  return oracle;
}

std::string to_string(SelectionReason r) {
  switch (r) {
    case SelectionReason::kNoSiblings: return "no-siblings";
    case SelectionReason::kOneParent: return "one-parent";
    case SelectionReason::kMostUnrejected: return "most-unrejected";
    case SelectionReason::kDfsLeastSignificant: return "dfs-least-significant";
    case SelectionReason::kSiblingOfInsignificant: return "sibling-of-insignificant";
    case SelectionReason::kUndecidedCandidate: return "undecided-candidate";
    case SelectionReason::kFinalCheck: return "final-check";
  }
  return "unknown";
}

std::string to_string(Relation r) { return r == Relation::kParent ? "parent" : "sibling"; }

std::string to_string(Action a) {
  switch (a) {
    case Action::kKeep: return "keep";
    case Action::kMerge: return "merge";
    case Action::kCheckSiblings: return "check-siblings";
    case Action::kDefer: return "defer";
    case Action::kReopen: return "reopen";
  }
  return "unknown";
}

OutcomeSummary summarize(std::span<const double> outcomes, std::size_t dataset_size) {
  OutcomeSummary s;
  s.count = outcomes.size();
  if (dataset_size > 0) s.share = 100.0 * static_cast<double>(s.count) / static_cast<double>(dataset_size);
  if (outcomes.empty()) return s;
  std::vector<double> sorted(outcomes.begin(), outcomes.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  s.min = sorted.front();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.max = sorted.back();
  return s;
}

const Troc* TrocSet::find(NodeId node) const {
  for (const auto& t : trocs)
    if (t.node == node) return &t;
  return nullptr;
}

namespace {

double median_of(const ValueCounts& a, const ValueCounts& b) {
  ValueCounts pooled = a;
  pooled.merge(b);
  const auto n = pooled.size();
  // Type 7 median: mean of the order statistics at floor/ceil of (n-1)/2.
  const std::uint64_t lo = (n - 1) / 2, hi = n / 2;
  double vlo = 0, vhi = 0;
  std::uint64_t seen = 0;
  for (const auto& [v, c] : pooled.entries()) {
    if (lo >= seen && lo < seen + c) vlo = v;
    if (hi >= seen && hi < seen + c) {
      vhi = v;
      break;
    }
    seen += c;
  }
  return (vlo + vhi) / 2.0;
}

// Odds-ratio magnitude max(OR, 1/OR) of `a` against `b` on the dichotomized
// outcome. A table with an empty row or column carries no contrast: 1.
double effect_magnitude(const ValueCounts& a, const ValueCounts& b, std::optional<double> threshold) {
  if (a.empty() || b.empty()) return 1.0;
  const double t = threshold ? *threshold : median_of(a, b);
  ContingencyTable table;
  auto fill = [&](const ValueCounts& g, std::size_t row) {
    for (const auto& [v, c] : g.entries()) table.cells[row][v > t ? 1 : 0] += c;
  };
  fill(a, 0);
  fill(b, 1);
  if (table.cells[0][0] + table.cells[1][0] == 0 || table.cells[0][1] + table.cells[1][1] == 0) return 1.0;
  const double r = odds_ratio(table).odds_ratio;
  return std::max(r, 1.0 / r);
}

struct Evaluation {
  std::vector<PairTest> tests;
  bool degenerate = false;
  bool significant = false;
  NodeId target = 0;
  double max_p = 1.0;
  double min_p = 1.0;
  std::size_t not_rejected = 0;
};

class Engine {
public:
  Engine(const Hierarchy& h, const Classification& cls, const Dataset& data, const SynthesisConfig& cfg,
         const TestOracle* oracle)
      : h_(h), data_(data), cfg_(cfg) {
    const std::size_t n = h.size();
    if (cls.node_of_row.size() != data.size() || cls.members.size() != n)
      throw Error("classification does not match the dataset and hierarchy");
    for (std::size_t row = 0; row < data.size(); ++row)
      if (cls.node_of_row[row] >= n) throw Error("classification names an unknown node");
    test_ = cfg.test ? cfg.test : TwoSampleTest([](const ValueCounts& a, const ValueCounts& b, double alpha) {
      return mann_whitney(a, b, alpha);
    });
    if (oracle) {
      for (const auto& [names, verdict] : oracle->pairs()) {
        auto a = h.find(names.first), b = h.find(names.second);
        if (!a) throw Error("oracle names an expression outside the hierarchy: " + names.first);
        if (!b) throw Error("oracle names an expression outside the hierarchy: " + names.second);
        oracle_[pair_key(*a, *b)] = verdict;
      }
    }

    status_.assign(n, Status::kPending);
    status_[h.root()] = Status::kKept;
    members_.assign(n, {});
    for (std::size_t row = 0; row < data.size(); ++row) members_[cls.node_of_row[row]].push_back(row);
    counts_.resize(n);
    for (NodeId v = 0; v < n; ++v)
      for (auto row : members_[v]) counts_[v].add(data.outcome(row));
    version_.assign(n, 0);
    parents_.resize(n);
    children_.resize(n);
    depth_.resize(n);
    for (const auto& node : h.nodes()) {
      parents_[node.id] = node.parents;
      children_[node.id] = node.children;
      depth_[node.id] = node.depth;
    }
    mark_.assign(n, 0);
  }

  TrocSet run() {
    const std::size_t limit = 64 * h_.size() + 1024;
    for (;;) {
      while (auto picked = select()) {
        process(picked->first, picked->second);
        if (trace_.size() > limit) throw Error("synthesis did not converge");
      }
      if (!final_check()) break;
    }
    return finish();
  }

private:
  enum class Status : std::uint8_t { kPending, kKept, kMerged };

  struct Cached {
    std::uint64_t version_lo = 0, version_hi = 0;
    TestResult result;  // oriented lo -> hi
  };

  const Hierarchy& h_;
  const Dataset& data_;
  const SynthesisConfig& cfg_;
  TwoSampleTest test_;
  std::unordered_map<std::uint64_t, TestOracle::Verdict> oracle_;
  std::unordered_map<std::uint64_t, Cached> cache_;

  std::vector<Status> status_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<ValueCounts> counts_;
  std::vector<std::uint64_t> version_;
  std::vector<std::vector<NodeId>> parents_, children_;
  std::vector<int> depth_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t stamp_ = 0;
  std::vector<TraceEvent> trace_;

  bool testable(NodeId v, NodeId w) const {
    return members_[w].size() >= 2 || oracle_.count(pair_key(v, w)) > 0;
  }

  std::vector<NodeId> siblings(NodeId v) {
    ++stamp_;
    std::vector<NodeId> out;
    for (auto p : parents_[v])
      for (auto c : children_[p])
        if (c != v && mark_[c] != stamp_) {
          mark_[c] = stamp_;
          out.push_back(c);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  TestResult raw_test(NodeId v, NodeId w) {
    const auto key = pair_key(v, w);
    if (auto it = oracle_.find(key); it != oracle_.end()) {
      TestResult r;
      r.n1 = members_[v].size();
      r.n2 = members_[w].size();
      r.method = TestMethod::kOracle;
      r.p_value = r.adjusted_p = it->second.p_value;
      r.rejected = it->second.rejected;
      return r;
    }
    const NodeId lo = std::min(v, w), hi = std::max(v, w);
    auto& slot = cache_[key];
    if (slot.result.n1 + slot.result.n2 == 0 || slot.version_lo != version_[lo] || slot.version_hi != version_[hi]) {
      slot.result = test_(counts_[lo], counts_[hi], cfg_.alpha);
      slot.version_lo = version_[lo];
      slot.version_hi = version_[hi];
    }
    TestResult r = slot.result;
    if (v != lo) {
      r.u = static_cast<double>(r.n1) * static_cast<double>(r.n2) - r.u;
      std::swap(r.n1, r.n2);
    }
    return r;
  }

  Evaluation evaluate(NodeId v) {
    Evaluation ev;
    ev.target = parents_[v].front();
    ev.degenerate = members_[v].size() < 2;
    if (ev.degenerate) return ev;  // merges unconditionally into its first parent

    // An untestable parent cannot reject; it ranks as p = 1 when choosing
    // where to merge, behind tested parents.
    std::optional<NodeId> untested_parent;
    for (auto p : parents_[v]) {
      if (testable(v, p))
        ev.tests.push_back({p, Relation::kParent, raw_test(v, p)});
      else if (!untested_parent)
        untested_parent = p;
    }
    for (auto s : siblings(v))
      if (testable(v, s)) ev.tests.push_back({s, Relation::kSibling, raw_test(v, s)});

    const std::size_t family = ev.tests.size();
    ev.significant = true;
    ev.max_p = 0.0;
    double best_parent_p = -1.0;
    for (auto& t : ev.tests) {
      auto& r = t.result;
      if (r.method != TestMethod::kOracle) {
        r.adjusted_p = cfg_.correction == Correction::kBonferroni ? bonferroni(r.p_value, family) : r.p_value;
        r.rejected = r.adjusted_p < cfg_.alpha;
      }
      if (!r.rejected) {
        ev.significant = false;
        ++ev.not_rejected;
      }
      ev.max_p = std::max(ev.max_p, r.adjusted_p);
      ev.min_p = std::min(ev.min_p, r.adjusted_p);
      if (t.relation == Relation::kParent && r.adjusted_p > best_parent_p) {
        best_parent_p = r.adjusted_p;
        ev.target = t.other;
      }
    }
    if (untested_parent && best_parent_p < 1.0) ev.target = *untested_parent;
    if (ev.tests.empty()) ev.max_p = 1.0;
    return ev;
  }

  TraceEvent event(NodeId v, SelectionReason reason, const Evaluation& ev) const {
    TraceEvent e;
    e.step = trace_.size() + 1;
    e.node = v;
    e.depth = depth_[v];
    e.reason = reason;
    e.members = members_[v].size();
    e.tests = ev.tests;
    e.significant = ev.significant && !ev.degenerate;
    e.degenerate = ev.degenerate;
    return e;
  }

  // Pending node at the deepest level, and why it goes first.
  std::optional<std::pair<NodeId, SelectionReason>> select() {
    int deepest = -1;
    std::vector<NodeId> level;
    for (NodeId v = 0; v < h_.size(); ++v) {
      if (status_[v] != Status::kPending || depth_[v] < deepest) continue;
      if (depth_[v] > deepest) {
        deepest = depth_[v];
        level.clear();
      }
      level.push_back(v);
    }
    if (deepest < 0) return std::nullopt;

    const auto& rank = h_.dfs_rank();
    auto first_by_dfs = [&](const std::vector<NodeId>& nodes) {
      return *std::min_element(nodes.begin(), nodes.end(), [&](NodeId a, NodeId b) { return rank[a] < rank[b]; });
    };
    std::vector<NodeId> pick;
    for (auto v : level)
      if (std::all_of(parents_[v].begin(), parents_[v].end(), [&](NodeId p) { return children_[p].size() == 1; }))
        pick.push_back(v);
    if (!pick.empty()) return std::pair{first_by_dfs(pick), SelectionReason::kNoSiblings};
    for (auto v : level)
      if (parents_[v].size() == 1) pick.push_back(v);
    if (!pick.empty()) return std::pair{first_by_dfs(pick), SelectionReason::kOneParent};

    // Most non-rejected tests; ties go to the least significant node, then DFS order.
    NodeId best = level.front();
    std::size_t best_count = 0, ties = 0;
    double best_min_p = -1.0;
    for (auto v : level) {
      const auto ev = evaluate(v);
      const std::size_t count = ev.degenerate ? parents_[v].size() + siblings(v).size() : ev.not_rejected;
      const double min_p = ev.degenerate ? 1.0 : ev.min_p;
      if (count > best_count || best_min_p < 0) {
        best = v;
        best_count = count;
        best_min_p = min_p;
        ties = 1;
      } else if (count == best_count) {
        ++ties;
        if (min_p > best_min_p || (min_p == best_min_p && rank[v] < rank[best])) {
          best = v;
          best_min_p = min_p;
        }
      }
    }
    return std::pair{best, ties > 1 ? SelectionReason::kDfsLeastSignificant : SelectionReason::kMostUnrejected};
  }

  void process(NodeId x, SelectionReason reason) {
    const auto ev = evaluate(x);
    auto e = event(x, reason, ev);
    if (e.significant) {
      e.action = Action::kKeep;
      status_[x] = Status::kKept;
      trace_.push_back(std::move(e));
      return;
    }
    std::vector<NodeId> same_level;
    for (auto s : siblings(x))
      if (status_[s] == Status::kPending && depth_[s] == depth_[x]) same_level.push_back(s);
    if (same_level.empty()) {
      e.action = Action::kMerge;
      e.merge = merge(x, ev.target);
      trace_.push_back(std::move(e));
      return;
    }

    // An insignificant node with undecided siblings: decide the siblings too,
    // then merge the insignificant ones starting from the weakest contrast.
    e.action = Action::kCheckSiblings;
    trace_.push_back(std::move(e));
    std::vector<std::pair<NodeId, Evaluation>> group{{x, ev}};
    for (auto s : same_level) {
      auto sev = evaluate(s);
      auto se = event(s, SelectionReason::kSiblingOfInsignificant, sev);
      if (se.significant) {
        se.action = Action::kKeep;
        status_[s] = Status::kKept;
      } else if (sev.degenerate) {
        se.action = Action::kMerge;
        se.merge = merge(s, sev.target);
      } else {
        se.action = Action::kDefer;
        group.emplace_back(s, std::move(sev));
      }
      trace_.push_back(std::move(se));
    }
    const auto order = merge_order(group);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const NodeId v = group[order[i]].first;
      if (i == 0 && !trace_.back().merge) {
        trace_.back().merge = merge(v, group[order[i]].second.target);
        continue;
      }
      const auto fresh = evaluate(v);
      auto fe = event(v, SelectionReason::kUndecidedCandidate, fresh);
      if (fe.significant) {
        fe.action = Action::kKeep;
        status_[v] = Status::kKept;
      } else {
        fe.action = Action::kMerge;
        fe.merge = merge(v, fresh.target);
      }
      trace_.push_back(std::move(fe));
    }
  }

  // Smaller effect first when the odds ratios differ decisively, otherwise
  // the higher p-value, then DFS order.
  std::vector<std::size_t> merge_order(const std::vector<std::pair<NodeId, Evaluation>>& group) const {
    std::vector<double> effect(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& [v, ev] = group[i];
      effect[i] = effect_magnitude(counts_[v], counts_[ev.target], cfg_.dichotomize_threshold);
    }
    const auto& rank = h_.dfs_rank();
    std::vector<std::size_t> left(group.size()), out;
    std::iota(left.begin(), left.end(), 0);
    while (!left.empty()) {
      double lowest = INFINITY;
      for (auto i : left) lowest = std::min(lowest, effect[i]);
      std::size_t best = group.size();
      for (auto i : left) {
        if (effect[i] >= lowest + cfg_.decisive_or_delta && effect[i] != lowest) continue;
        if (best == group.size()) {
          best = i;
          continue;
        }
        const double pi = group[i].second.max_p, pb = group[best].second.max_p;
        if (pi > pb || (pi == pb && rank[group[i].first] < rank[group[best].first])) best = i;
      }
      out.push_back(best);
      left.erase(std::find(left.begin(), left.end(), best));
    }
    return out;
  }

  MergeRecord merge(NodeId v, NodeId into) {
    MergeRecord rec;
    rec.node = v;
    rec.into = into;
    rec.moved = members_[v].size();

    std::vector<std::size_t> joined;
    joined.reserve(members_[into].size() + members_[v].size());
    std::merge(members_[into].begin(), members_[into].end(), members_[v].begin(), members_[v].end(),
               std::back_inserter(joined));
    members_[into] = std::move(joined);
    members_[v].clear();
    counts_[into].merge(counts_[v]);
    counts_[v] = ValueCounts();
    ++version_[into];
    ++version_[v];
    status_[v] = Status::kMerged;

    for (auto p : parents_[v]) std::erase(children_[p], v);
    const auto orphans = children_[v];
    for (auto c : orphans) {
      std::vector<NodeId> cand;
      for (auto p : parents_[c])
        if (p != v) cand.push_back(p);
      cand.insert(cand.end(), parents_[v].begin(), parents_[v].end());
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      std::vector<NodeId> minimal;
      for (auto a : cand) {
        bool above_other = false;
        for (auto b : cand)
          if (b != a && h_.is_ancestor(a, b)) {
            above_other = true;
            break;
          }
        if (!above_other) minimal.push_back(a);
      }
      bool gained = false;
      for (auto p : minimal)
        if (!std::binary_search(parents_[c].begin(), parents_[c].end(), p)) {
          gained = true;
          children_[p].insert(std::upper_bound(children_[p].begin(), children_[p].end(), c), c);
        }
      parents_[c] = std::move(minimal);
      if (gained && status_[c] == Status::kKept) {
        status_[c] = Status::kPending;
        rec.transmitted.push_back(c);
      }
    }
    parents_[v].clear();
    children_[v].clear();
    refresh_depths(orphans);
    return rec;
  }

  // Longest-path depth below the given nodes. Ids follow the original depth,
  // so ascending id order visits parents first.
  void refresh_depths(const std::vector<NodeId>& from) {
    ++stamp_;
    std::vector<NodeId> todo(from.begin(), from.end()), seen;
    for (auto v : todo) mark_[v] = stamp_;
    while (!todo.empty()) {
      const NodeId v = todo.back();
      todo.pop_back();
      seen.push_back(v);
      for (auto c : children_[v])
        if (mark_[c] != stamp_) {
          mark_[c] = stamp_;
          todo.push_back(c);
        }
    }
    std::sort(seen.begin(), seen.end());
    for (auto v : seen) {
      int d = 0;
      for (auto p : parents_[v]) d = std::max(d, depth_[p] + 1);
      depth_[v] = d;
    }
  }

  // Re-test every kept node against its current neighbours; reopen failures.
  bool final_check() {
    bool reopened = false;
    for (NodeId v = 0; v < h_.size(); ++v) {
      if (status_[v] != Status::kKept || v == h_.root()) continue;
      const auto ev = evaluate(v);
      if (ev.significant && !ev.degenerate) continue;
      auto e = event(v, SelectionReason::kFinalCheck, ev);
      e.action = Action::kReopen;
      trace_.push_back(std::move(e));
      status_[v] = Status::kPending;
      reopened = true;
    }
    return reopened;
  }

  TrocSet finish() {
    TrocSet out;
    out.dataset_size = data_.size();
    out.trace = std::move(trace_);
    out.active.assign(h_.size(), false);
    out.active_parents.assign(h_.size(), {});
    for (NodeId v = 0; v < h_.size(); ++v) {
      if (status_[v] == Status::kMerged) continue;
      out.active[v] = true;
      out.active_parents[v] = parents_[v];
      if (members_[v].empty()) continue;
      Troc t;
      t.node = v;
      t.pattern = h_.node(v).text;
      t.rows = members_[v];
      std::vector<double> values;
      values.reserve(t.rows.size());
      for (auto row : t.rows) values.push_back(data_.outcome(row));
      t.summary = summarize(values, data_.size());
      out.trocs.push_back(std::move(t));
    }
    return out;
  }
};

}  // namespace

TrocSet synthesize(const Hierarchy& hierarchy, const Classification& classification, const Dataset& data,
                   const SynthesisConfig& config, const TestOracle* oracle) {
  config.validate();
  if (data.empty()) throw Error("cannot synthesize over an empty dataset");
  return Engine(hierarchy, classification, data, config, oracle).run();
}

ContractReport verify_output_contract(const TrocSet& trocs, const Hierarchy& hierarchy, const Dataset& data,
                                      const SynthesisConfig& config, const TestOracle* oracle) {
  ContractReport report;
  const std::size_t n = hierarchy.size();
  auto name = [&](NodeId v) { return v < n ? hierarchy.node(v).text : "#" + std::to_string(v); };

  // (1) every row in exactly one TrOC
  std::vector<int> owner_count(data.size(), 0);
  for (const auto& t : trocs.trocs)
    for (auto row : t.rows) {
      if (row >= data.size()) {
        report.violations.push_back({1, name(t.node) + " holds row " + std::to_string(row) + " outside the dataset"});
        continue;
      }
      ++owner_count[row];
    }
  for (std::size_t row = 0; row < data.size(); ++row)
    if (owner_count[row] != 1)
      report.violations.push_back({1, "itemset " + data.itemset(row).id + " belongs to " +
                                          std::to_string(owner_count[row]) + " TrOCs"});

  // (2) distinct patterns
  std::map<std::string, NodeId> seen_text;
  std::map<NodeId, int> seen_node;
  for (const auto& t : trocs.trocs) {
    if (++seen_node[t.node] > 1) report.violations.push_back({2, "node " + name(t.node) + " listed twice"});
    auto [it, fresh] = seen_text.emplace(t.pattern, t.node);
    if (!fresh) report.violations.push_back({2, "pattern " + t.pattern + " listed twice"});
  }
  for (std::size_t i = 0; i < trocs.trocs.size(); ++i)
    for (std::size_t j = i + 1; j < trocs.trocs.size(); ++j) {
      const auto a = trocs.trocs[i].node, b = trocs.trocs[j].node;
      if (a != b && a < n && b < n && hierarchy.automaton(a) == hierarchy.automaton(b))
        report.violations.push_back({2, name(a) + " and " + name(b) + " denote the same language"});
    }
  if (trocs.active.size() != n || trocs.active_parents.size() != n) {
    report.violations.push_back({4, "final structure does not match the hierarchy"});
    return report;
  }

  // Outcome samples of the final nodes.
  std::vector<ValueCounts> counts(n);
  for (const auto& t : trocs.trocs)
    if (t.node < n)
      for (auto row : t.rows)
        if (row < data.size()) counts[t.node].add(data.outcome(row));

  std::unordered_map<std::uint64_t, TestOracle::Verdict> verdicts;
  if (oracle)
    for (const auto& [names, v] : oracle->pairs()) {
      auto a = hierarchy.find(names.first), b = hierarchy.find(names.second);
      if (a && b) verdicts[pair_key(*a, *b)] = v;
    }
  const TwoSampleTest test = config.test ? config.test : TwoSampleTest([](const ValueCounts& a, const ValueCounts& b,
                                                                            double alpha) {
    return mann_whitney(a, b, alpha);
  });

  std::vector<std::vector<NodeId>> children(n);
  for (NodeId v = 0; v < n; ++v)
    if (trocs.active[v])
      for (auto p : trocs.active_parents[v]) children[p].push_back(v);
  auto siblings = [&](NodeId v) {
    std::vector<NodeId> out;
    for (auto p : trocs.active_parents[v])
      for (auto c : children[p])
        if (c != v) out.push_back(c);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  auto testable = [&](NodeId a, NodeId b) {
    return verdicts.count(pair_key(a, b)) || (counts[a].size() >= 2 && counts[b].size() >= 2);
  };
  auto family = [&](NodeId v) {
    std::size_t f = 0;
    for (auto p : trocs.active_parents[v]) f += testable(v, p);
    for (auto s : siblings(v)) f += testable(v, s);
    return f;
  };
  // Test of a pair under the family of `owner`.
  auto run = [&](NodeId a, NodeId b, NodeId owner, AdjacentPair& pair) {
    if (auto it = verdicts.find(pair_key(a, b)); it != verdicts.end()) {
      pair.from_oracle = true;
      TestResult r;
      r.method = TestMethod::kOracle;
      r.p_value = r.adjusted_p = it->second.p_value;
      r.n1 = counts[a].size();
      r.n2 = counts[b].size();
      r.rejected = it->second.rejected;
      return r;
    }
    auto r = test(counts[a], counts[b], config.alpha);
    r.adjusted_p = config.correction == Correction::kBonferroni ? bonferroni(r.p_value, family(owner)) : r.p_value;
    r.rejected = r.adjusted_p < config.alpha;
    return r;
  };

  for (NodeId v = 0; v < n; ++v) {
    if (!trocs.active[v]) continue;
    for (auto p : trocs.active_parents[v]) {
      if (!trocs.active[p]) {
        report.violations.push_back({4, name(v) + " hangs under merged node " + name(p)});
        continue;
      }
      AdjacentPair pair{p, v, Relation::kParent, false, false, {}};
      if (!testable(v, p)) {
        report.notes.push_back(name(p) + " / " + name(v) + ": too few members to test");
        report.pairs.push_back(pair);
        continue;
      }
      pair.tested = true;
      pair.result = run(p, v, v, pair);
      if (!pair.result.rejected)
        report.violations.push_back({4, "parent " + name(p) + " and child " + name(v) + " do not differ"});
      report.pairs.push_back(pair);
    }
    for (auto s : siblings(v)) {
      if (s < v) continue;
      AdjacentPair pair{v, s, Relation::kSibling, false, false, {}};
      if (!testable(v, s)) {
        report.notes.push_back(name(v) + " / " + name(s) + ": too few members to test");
        report.pairs.push_back(pair);
        continue;
      }
      pair.tested = true;
      const auto under_v = run(v, s, v, pair);
      const auto under_s = run(v, s, s, pair);
      pair.result = under_v.adjusted_p >= under_s.adjusted_p ? under_v : under_s;
      pair.result.rejected = under_v.rejected && under_s.rejected;
      if (!pair.result.rejected)
        report.violations.push_back({3, "siblings " + name(v) + " and " + name(s) + " do not differ"});
      report.pairs.push_back(pair);
    }
  }
  return report;
}

namespace {

json test_json(const PairTest& t, const Hierarchy& h) {
  return json{{"with", h.node(t.other).text},
              {"relation", to_string(t.relation)},
              {"u", t.result.u},
              {"n1", t.result.n1},
              {"n2", t.result.n2},
              {"method", to_string(t.result.method)},
              {"p", t.result.p_value},
              {"adjusted_p", t.result.adjusted_p},
              {"rejected", t.result.rejected}};
}

json summary_json(const OutcomeSummary& s) {
  return json{{"count", s.count}, {"share", s.share}, {"mean", s.mean}, {"min", s.min}, {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

}  // namespace

std::string trace_to_jsonl(const TrocSet& trocs, const Hierarchy& hierarchy) {
  std::string out;
  for (const auto& e : trocs.trace) {
    json j{{"step", e.step},
           {"node", hierarchy.node(e.node).text},
           {"node_id", e.node},
           {"depth", e.depth},
           {"reason", to_string(e.reason)},
           {"members", e.members},
           {"degenerate", e.degenerate},
           {"verdict", e.significant ? "significant" : "insignificant"},
           {"action", to_string(e.action)}};
    json tests = json::array();
    for (const auto& t : e.tests) tests.push_back(test_json(t, hierarchy));
    j["tests"] = std::move(tests);
    if (e.merge) {
      json transmitted = json::array();
      for (auto c : e.merge->transmitted) transmitted.push_back(hierarchy.node(c).text);
      j["merge"] = json{{"node", hierarchy.node(e.merge->node).text},
                        {"into", hierarchy.node(e.merge->into).text},
                        {"moved", e.merge->moved},
                        {"transmitted", std::move(transmitted)}};
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string trocs_to_json(const TrocSet& trocs) {
  json list = json::array();
  for (const auto& t : trocs.trocs)
    list.push_back(json{{"node_id", t.node}, {"pattern", t.pattern}, {"summary", summary_json(t.summary)}});
  return json{{"dataset_size", trocs.dataset_size}, {"trocs", std::move(list)}}.dump(2) + "\n";
}

std::string trocs_to_csv(const TrocSet& trocs) {
  std::ostringstream os;
  os << "pattern,count,share,mean,min,q1,median,q3,max\n";
  for (const auto& t : trocs.trocs) {
    const auto& s = t.summary;
    os << csv::escape(t.pattern) << ',' << s.count << ',' << format_number(s.share) << ',' << format_number(s.mean)
       << ',' << format_number(s.min) << ',' << format_number(s.q1) << ',' << format_number(s.median) << ','
       << format_number(s.q3) << ',' << format_number(s.max) << '\n';
  }
  return os.str();
}

}  // namespace gwm
