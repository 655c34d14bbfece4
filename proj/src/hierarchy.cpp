#include "gwm/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gwm/csv.hpp"
#include "gwm/error.hpp"

namespace gwm {

namespace {

// Representative preference within a language class: fewer stars, then
// shorter text, then canonical text order.
bool better_representative(const PatternExpr& a, const PatternExpr& b, const Alphabet& alphabet) {
  if (a.star_count() != b.star_count()) return a.star_count() < b.star_count();
  const auto ta = a.text(), tb = b.text();
  if (ta.size() != tb.size()) return ta.size() < tb.size();
  return canonical_text_less(ta, tb, alphabet);
}

std::vector<PatternExpr> all_expressions(const Alphabet& alphabet) {
  const std::size_t n = alphabet.size();
  std::vector<PatternExpr> out;
  for (std::size_t k = 1; k <= n; ++k) {
    // Every ordered selection of k distinct symbols: choose a subset, then permute.
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
      std::vector<std::size_t> chosen;
      for (std::size_t i = 0; i < n; ++i)
        if (pick[i]) chosen.push_back(i);
      do {
        for (unsigned stars = 0; stars < (1u << k); ++stars)
          for (int outer = 0; outer < 2; ++outer) {
            std::vector<Atom> atoms;
            for (std::size_t i = 0; i < k; ++i) atoms.push_back({alphabet[chosen[i]], ((stars >> i) & 1u) != 0});
            out.emplace_back(std::move(atoms), outer == 1);
          }
      } while (std::next_permutation(chosen.begin(), chosen.end()));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

// Words over alphabet positions with no run longer than two, up to max_len,
// in depth-first order. Membership in the grammar depends only on this form.
void sample_words(std::size_t k, std::size_t max_len, std::vector<std::vector<std::uint8_t>>& out,
                  std::vector<std::uint8_t>& cur) {
  out.push_back(cur);
  if (cur.size() == max_len) return;
  for (std::uint8_t a = 0; a < k; ++a) {
    const std::size_t len = cur.size();
    if (len >= 2 && cur[len - 1] == a && cur[len - 2] == a) continue;
    cur.push_back(a);
    sample_words(k, max_len, out, cur);
    cur.pop_back();
  }
}

// Symbols and adjacent pairs a word may show. For a node these are read off
// its automaton; a word can only match if its own shape fits inside.
Shape node_shape(const PatternExpr& expr, const Dfa& dfa, const Alphabet& alphabet) {
  const std::size_t states = dfa.state_count(), k = dfa.symbol_count();
  if (k > 8) return {~0u, 0, ~0u, ~0u, ~0ULL};  // no filtering on large alphabets
  std::vector<char> live(states, 0), reached(states, 0);
  for (std::size_t q = 0; q < states; ++q) live[q] = dfa.accepting(static_cast<std::uint32_t>(q));
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t q = 0; q < states; ++q)
      for (std::size_t a = 0; a < k && !live[q]; ++a)
        if (live[dfa.next(static_cast<std::uint32_t>(q), a)]) live[q] = changed = true;
  }
  std::vector<std::uint32_t> todo{0};
  reached[0] = 1;
  while (!todo.empty()) {
    const auto q = todo.back();
    todo.pop_back();
    for (std::size_t a = 0; a < k; ++a) {
      const auto t = dfa.next(q, a);
      if (!reached[t]) {
        reached[t] = 1;
        todo.push_back(t);
      }
    }
  }
  Shape out;
  for (const auto& atom : expr.atoms()) {
    out.used |= 1u << alphabet.index_of(atom.symbol);
    if (!atom.starred) out.required |= 1u << alphabet.index_of(atom.symbol);
  }
  for (std::size_t a = 0; a < k; ++a)
    if (live[dfa.next(0, a)]) out.first |= 1u << a;
  for (std::uint32_t q = 0; q < states; ++q) {
    if (!reached[q] || !live[q]) continue;
    for (std::size_t x = 0; x < k; ++x) {
      const auto q1 = dfa.next(q, x);
      if (!live[q1]) continue;
      if (dfa.accepting(q1)) out.last |= 1u << x;
      for (std::size_t y = 0; y < k; ++y)
        if (live[dfa.next(q1, y)]) out.pairs |= 1ULL << (x * 8 + y);
    }
  }
  return out;
}

Shape word_shape(const std::vector<std::uint8_t>& word) {
  Shape s;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word[i] >= 8) return {};
    s.used |= 1u << word[i];
    if (i > 0) s.pairs |= 1ULL << (word[i - 1] * 8 + word[i]);
  }
  if (!word.empty()) {
    s.first = 1u << word.front();
    s.last = 1u << word.back();
  }
  return s;
}

std::vector<std::uint8_t> to_indices(std::string_view s, const Alphabet& alphabet) {
  std::vector<std::uint8_t> w;
  w.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int a = alphabet.index_of(s[i]);
    if (a < 0)
      throw Error(std::string("symbol '") + s[i] + "' at position " + std::to_string(i + 1) +
                  " is not in alphabet " + alphabet.symbols());
    w.push_back(static_cast<std::uint8_t>(a));
  }
  return w;
}

}  // namespace

std::string cap_runs(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const std::size_t n = out.size();
    if (n >= 2 && out[n - 1] == c && out[n - 2] == c) continue;
    out.push_back(c);
  }
  return out;
}

Hierarchy Hierarchy::enumerate(const Alphabet& alphabet) {
  const std::size_t k = alphabet.size();
  if (k < 1 || k > kMaxEnumeratedAlphabet)
    throw Error("hierarchy enumeration supports alphabets of 1.." + std::to_string(kMaxEnumeratedAlphabet) +
                " symbols, got " + std::to_string(k));

  // Deduplicate by minimized automaton.
  std::unordered_map<std::string, std::size_t> class_of;
  std::vector<PatternExpr> reps;
  std::vector<Dfa> dfas;
  for (auto& expr : all_expressions(alphabet)) {
    Dfa dfa = Dfa::compile(expr, alphabet).minimized();
    auto key = dfa.canonical_key();
    const auto it = class_of.find(key);
    if (it == class_of.end()) {
      class_of.emplace(std::move(key), reps.size());
      reps.push_back(std::move(expr));
      dfas.push_back(std::move(dfa));
    } else if (better_representative(expr, reps[it->second], alphabet)) {
      reps[it->second] = std::move(expr);
    }
  }
  const std::size_t n = reps.size();

  // Membership of every node over a bounded sample; a strict superset of
  // L(q) must contain every sample word of L(q). The sample includes one
  // pass over all atoms, so no language misses it.
  std::vector<std::vector<std::uint8_t>> words;
  std::vector<std::uint8_t> cur;
  sample_words(k, k + 1, words, cur);
  const std::size_t w_count = words.size();
  // Words come in prefix order, so each word's state extends an earlier one.
  std::vector<std::size_t> prefix(w_count, 0);
  {
    std::map<std::vector<std::uint8_t>, std::size_t> index;
    for (std::size_t w = 0; w < w_count; ++w) {
      index.emplace(words[w], w);
      if (!words[w].empty())
        prefix[w] = index.at(std::vector<std::uint8_t>(words[w].begin(), words[w].end() - 1));
    }
  }
  const std::size_t blocks = (w_count + 63) / 64;
  std::vector<std::uint64_t> bits(n * blocks, 0);
  std::vector<std::vector<std::uint32_t>> containers(w_count);
  std::vector<std::uint32_t> state(w_count, 0);
  for (std::size_t q = 0; q < n; ++q) {
    const Dfa& dfa = dfas[q];
    for (std::size_t w = 0; w < w_count; ++w) {
      if (w > 0) state[w] = dfa.next(state[prefix[w]], words[w].back());
      if (dfa.accepting(state[w])) {
        bits[q * blocks + w / 64] |= std::uint64_t{1} << (w % 64);
        containers[w].push_back(static_cast<std::uint32_t>(q));
      }
    }
  }
  std::vector<unsigned> masks(n);
  for (std::size_t q = 0; q < n; ++q) masks[q] = reps[q].symbol_mask(alphabet);

  auto sample_subset = [&](std::size_t sub, std::size_t super) {
    const std::uint64_t* a = &bits[sub * blocks];
    const std::uint64_t* b = &bits[super * blocks];
    for (std::size_t i = 0; i < blocks; ++i)
      if (a[i] & ~b[i]) return false;
    return true;
  };

  std::vector<std::vector<std::size_t>> ancestors(n);
  for (std::size_t q = 0; q < n; ++q) {
    std::size_t rarest = w_count;
    for (std::size_t w = 0; w < w_count; ++w)
      if ((bits[q * blocks + w / 64] >> (w % 64)) & 1u)
        if (rarest == w_count || containers[w].size() < containers[rarest].size()) rarest = w;
    if (rarest == w_count) throw Error("internal: pattern " + reps[q].text() + " has no sample word");
    for (auto p : containers[rarest]) {
      if (p == q) continue;
      if ((masks[q] & ~masks[p]) != 0) continue;
      if (!sample_subset(q, p)) continue;
      if (language_includes(dfas[p], dfas[q])) ancestors[q].push_back(p);
    }
  }

  // Transitive reduction: a parent is an ancestor not above another ancestor.
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<std::uint8_t> covered(n, 0);
  for (std::size_t q = 0; q < n; ++q) {
    for (auto a : ancestors[q])
      for (auto b : ancestors[a]) covered[b] = 1;
    for (auto a : ancestors[q])
      if (!covered[a]) parents[q].push_back(a);
    for (auto a : ancestors[q])
      for (auto b : ancestors[a]) covered[b] = 0;
  }
  return assemble(alphabet, std::move(reps), std::move(dfas), std::move(parents));
}

Hierarchy Hierarchy::from_edges(const Alphabet& alphabet, const std::vector<PatternExpr>& exprs,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<Dfa> dfas;
  dfas.reserve(exprs.size());
  for (const auto& e : exprs) dfas.push_back(Dfa::compile(e, alphabet).minimized());
  for (std::size_t i = 0; i < exprs.size(); ++i)
    for (std::size_t j = i + 1; j < exprs.size(); ++j)
      if (dfas[i] == dfas[j])
        throw Error("hierarchy nodes " + exprs[i].text() + " and " + exprs[j].text() + " denote the same language");
  std::vector<std::vector<std::size_t>> parents(exprs.size());
  for (const auto& [p, c] : edges) {
    if (p >= exprs.size() || c >= exprs.size()) throw Error("hierarchy edge refers to an unknown node");
    if (!language_includes(dfas[p], dfas[c]))
      throw Error("edge " + exprs[p].text() + " -> " + exprs[c].text() + " does not respect language inclusion");
    if (std::find(parents[c].begin(), parents[c].end(), p) == parents[c].end()) parents[c].push_back(p);
  }
  return assemble(alphabet, exprs, std::move(dfas), std::move(parents));
}

Hierarchy Hierarchy::assemble(const Alphabet& alphabet, std::vector<PatternExpr> exprs, std::vector<Dfa> dfas,
                              std::vector<std::vector<std::size_t>> parents) {
  const std::size_t n = exprs.size();
  if (n == 0) throw Error("hierarchy has no nodes");
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t c = 0; c < n; ++c)
    for (auto p : parents[c]) {
      children[p].push_back(c);
      ++indegree[c];
    }
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i)
    if (parents[i].empty()) roots.push_back(i);
  if (roots.size() != 1) throw Error("hierarchy must have exactly one root, found " + std::to_string(roots.size()));

  // Longest-path depth via Kahn's order.
  std::vector<int> depth(n, 0);
  std::vector<std::size_t> topo{roots[0]};
  auto remaining = indegree;
  for (std::size_t i = 0; i < topo.size(); ++i)
    for (auto c : children[topo[i]]) {
      depth[c] = std::max(depth[c], depth[topo[i]] + 1);
      if (--remaining[c] == 0) topo.push_back(c);
    }
  if (topo.size() != n) throw Error("hierarchy contains a cycle or unreachable nodes");

  std::vector<std::string> texts(n);
  for (std::size_t i = 0; i < n; ++i) texts[i] = exprs[i].text();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (depth[a] != depth[b]) return depth[a] < depth[b];
    return canonical_text_less(texts[a], texts[b], alphabet);
  });
  std::vector<NodeId> new_id(n);
  for (std::size_t i = 0; i < n; ++i) new_id[order[i]] = static_cast<NodeId>(i);

  Hierarchy h;
  h.alphabet_ = alphabet;
  h.nodes_.reserve(n);
  h.dfas_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t old = order[i];
    HierarchyNode node{static_cast<NodeId>(i), exprs[old], texts[old], depth[old], {}, {}};
    for (auto p : parents[old]) node.parents.push_back(new_id[p]);
    for (auto c : children[old]) node.children.push_back(new_id[c]);
    std::sort(node.parents.begin(), node.parents.end());
    std::sort(node.children.begin(), node.children.end());
    h.nodes_.push_back(std::move(node));
    h.dfas_.push_back(std::move(dfas[old]));
  }

  // Ancestor sets in id order: parents always have smaller depth, hence smaller id.
  h.ancestors_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> anc;
    for (auto p : h.nodes_[i].parents) {
      anc.push_back(p);
      anc.insert(anc.end(), h.ancestors_[p].begin(), h.ancestors_[p].end());
    }
    std::sort(anc.begin(), anc.end());
    anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
    h.ancestors_[i] = std::move(anc);
  }

  h.filters_.resize(n);
  for (std::size_t i = n; i-- > 0;) {
    const auto shape = node_shape(h.nodes_[i].expr, h.dfas_[i], alphabet);
    auto& f = h.filters_[i];
    f.allowed = shape.used == ~0u ? ~0u : shape.used | shape.first << 8 | shape.last << 16;
    f.required = shape.required;
    f.pairs = shape.pairs;
    f.depth = f.deepest_below = h.nodes_[i].depth;
    for (auto c : h.nodes_[i].children) f.deepest_below = std::max(f.deepest_below, h.filters_[c].deepest_below);
  }

  h.dfs_rank_.assign(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = 1;
    h.dfs_rank_[v] = h.dfs_order_.size();
    h.dfs_order_.push_back(v);
    const auto& ch = h.nodes_[v].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it)
      if (!seen[*it]) stack.push_back(*it);
  }
  return h;
}

int Hierarchy::max_depth() const noexcept {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::optional<NodeId> Hierarchy::find(const PatternExpr& expr) const {
  for (const auto& n : nodes_)
    if (n.expr == expr) return n.id;
  for (const auto& a : expr.atoms())
    if (!alphabet_.contains(a.symbol)) return std::nullopt;
  const Dfa dfa = Dfa::compile(expr, alphabet_).minimized();
  for (const auto& n : nodes_)
    if (dfas_[n.id] == dfa) return n.id;
  return std::nullopt;
}

std::optional<NodeId> Hierarchy::find(std::string_view text) const { return find(PatternExpr::parse(text)); }

bool Hierarchy::is_ancestor(NodeId ancestor, NodeId node) const {
  const auto& anc = ancestors_.at(node);
  return std::binary_search(anc.begin(), anc.end(), ancestor);
}

NodeId Hierarchy::classify(std::string_view s) const {
  const auto word = to_indices(cap_runs(s), alphabet_);
  if (!dfas_[0].accepts_indices(word)) throw Error("no hierarchy node matches '" + std::string(s) + "'");
  const auto shape = word_shape(word);
  const std::uint32_t need = shape.used | shape.first << 8 | shape.last << 16;
  // Cheap necessary conditions first; most children fail them.
  auto may_match = [&](NodeId v) {
    const auto& f = filters_[v];
    return (need & ~f.allowed) == 0 && (shape.pairs & ~f.pairs) == 0 && (word.empty() || (f.required & ~shape.used) == 0);
  };

  thread_local std::vector<std::uint32_t> seen;
  thread_local std::uint32_t stamp = 0;
  if (seen.size() < nodes_.size()) seen.assign(nodes_.size(), 0);
  if (++stamp == 0) {
    std::fill(seen.begin(), seen.end(), 0);
    stamp = 1;
  }
  NodeId best = 0;
  int best_depth = 0;
  std::vector<NodeId> stack{0};
  seen[0] = stamp;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto c : nodes_[v].children) {
      if (seen[c] == stamp) continue;
      seen[c] = stamp;
      // Nothing at or below c can beat the best container found so far.
      if (filters_[c].deepest_below < best_depth) continue;
      if (!may_match(c) || !dfas_[c].accepts_indices(word)) continue;
      stack.push_back(c);
      const int d = filters_[c].depth;
      // Equally deep: the tighter-looking expression, so AABBB lands in A*B*.
      if (d > best_depth || (d == best_depth && (best == 0 || better_representative(nodes_[c].expr, nodes_[best].expr, alphabet_)))) {
        best = c;
        best_depth = d;
      }
    }
  }
  return best;
}

Classification classify_all(const Hierarchy& hierarchy, const std::vector<std::string>& strings) {
  Classification out;
  out.node_of_row.reserve(strings.size());
  out.members.assign(hierarchy.size(), {});
  std::unordered_map<std::string, NodeId> memo;
  for (std::size_t row = 0; row < strings.size(); ++row) {
    if (strings[row].empty()) throw Error("cannot classify an empty sequence (row " + std::to_string(row + 1) + ")");
    auto key = cap_runs(strings[row]);
    auto it = memo.find(key);
    if (it == memo.end()) {
      const NodeId id = hierarchy.classify(key);
      it = memo.emplace(std::move(key), id).first;
    }
    out.node_of_row.push_back(it->second);
    out.members[it->second].push_back(row);
  }
  return out;
}

Classification classify_all(const Hierarchy& hierarchy, const Dataset& data) {
  std::vector<std::string> strings;
  strings.reserve(data.size());
  for (const auto& item : data.itemsets()) strings.push_back(item.sequence);
  try {
    return classify_all(hierarchy, strings);
  } catch (const Error& e) {
    throw Error(std::string("classify: ") + e.what());
  }
}

std::string Hierarchy::to_json() const {
  nlohmann::ordered_json j;
  j["alphabet"] = alphabet_.symbols();
  auto nodes = nlohmann::ordered_json::array();
  auto edges = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["expr"] = n.text;
    node["depth"] = n.depth;
    nodes.push_back(std::move(node));
    for (auto c : n.children) {
      nlohmann::ordered_json e;
      e["parent"] = n.id;
      e["child"] = c;
      edges.push_back(std::move(e));
    }
  }
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

Hierarchy Hierarchy::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const Alphabet alphabet(j.at("alphabet").get<std::string>());
    std::vector<PatternExpr> exprs;
    std::map<long long, std::size_t> index_of;
    for (const auto& node : j.at("nodes")) {
      const auto id = node.at("id").get<long long>();
      if (!index_of.emplace(id, exprs.size()).second) throw Error("duplicate node id " + std::to_string(id));
      exprs.push_back(PatternExpr::parse(node.at("expr").get<std::string>()));
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (j.contains("edges"))
      for (const auto& e : j["edges"]) {
        const auto p = index_of.find(e.at("parent").get<long long>());
        const auto c = index_of.find(e.at("child").get<long long>());
        if (p == index_of.end() || c == index_of.end()) throw Error("edge refers to an unknown node id");
        edges.emplace_back(p->second, c->second);
      }
    return from_edges(alphabet, exprs, edges);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("hierarchy JSON: ") + e.what());
  }
}

std::string Hierarchy::to_csv() const {
  std::string out = "id,expr,parent_ids\n";
  for (const auto& n : nodes_) {
    out += std::to_string(n.id) + "," + csv::escape(n.text) + ",";
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(n.parents[i]);
    }
    out += '\n';
  }
  return out;
}

Hierarchy Hierarchy::from_csv(const std::string& text, const Alphabet& alphabet) {
  std::istringstream in(text);
  std::string line;
  if (!csv::read_line(in, line, true)) throw ParseError("missing header row", 1);
  std::vector<PatternExpr> exprs;
  std::vector<std::vector<std::string>> parent_ids;
  std::map<std::string, std::size_t> index_of;
  std::size_t lineno = 1;
  while (csv::read_line(in, line, false)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    try {
      const auto f = csv::split_line(line);
      if (f.size() < 2 || f.size() > 3) throw Error("expected id,expr,parent_ids");
      const auto id = csv::trim(f[0]);
      if (!index_of.emplace(id, exprs.size()).second) throw Error("duplicate node id " + id);
      exprs.push_back(PatternExpr::parse(csv::trim(f[1])));
      std::vector<std::string> ps;
      if (f.size() == 3)
        for (const auto& p : csv::split(f[2], ';'))
          if (!csv::trim(p).empty()) ps.push_back(csv::trim(p));
      parent_ids.push_back(std::move(ps));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t c = 0; c < exprs.size(); ++c)
    for (const auto& p : parent_ids[c]) {
      const auto it = index_of.find(p);
      if (it == index_of.end()) throw Error("unknown parent id " + p);
      edges.emplace_back(it->second, c);
    }
  return from_edges(alphabet, exprs, edges);
}

Hierarchy Hierarchy::load(const std::filesystem::path& path, const std::optional<Alphabet>& alphabet) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open hierarchy " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".csv") {
    if (!alphabet) throw Error("a CSV hierarchy needs an alphabet");
    return from_csv(ss.str(), *alphabet);
  }
  return from_json(ss.str());
}

}  // namespace gwm
