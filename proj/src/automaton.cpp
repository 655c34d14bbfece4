#include "gwm/automaton.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "gwm/error.hpp"

namespace gwm {

Dfa Dfa::compile(const PatternExpr& expr, const Alphabet& alphabet) {
  const auto& atoms = expr.atoms();
  const std::size_t n = atoms.size();
  const std::size_t k = alphabet.size();
  std::vector<std::size_t> sym(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int idx = alphabet.index_of(atoms[i].symbol);
    if (idx < 0)
      throw Error(std::string("symbol '") + atoms[i].symbol + "' is not in alphabet " + alphabet.symbols());
    sym[i] = static_cast<std::size_t>(idx);
  }

  // States: 0 = start, 1..n = atom positions, n+1 = sink.
  const std::uint32_t sink = static_cast<std::uint32_t>(n + 1);
  Dfa dfa;
  dfa.k_ = k;
  dfa.delta_.assign((n + 2) * k, sink);
  dfa.accepting_.assign(n + 2, 0);

  // Positions reachable after position `from` (or from the start when from == n):
  // the next atom, plus any atom after a run of skippable starred atoms.
  auto follow = [&](std::size_t first) {
    std::vector<std::size_t> out;
    for (std::size_t j = first; j < n; ++j) {
      out.push_back(j);
      if (!atoms[j].starred) break;
    }
    return out;
  };
  auto is_last = [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j)
      if (!atoms[j].starred) return false;
    return true;
  };
  const std::vector<std::size_t> first = follow(0);

  auto add = [&](std::uint32_t state, const std::vector<std::size_t>& targets) {
    for (std::size_t j : targets) dfa.delta_[state * k + sym[j]] = static_cast<std::uint32_t>(j + 1);
  };
  add(0, first);
  dfa.accepting_[0] = expr.nullable();
  for (std::size_t i = 0; i < n; ++i) {
    const auto state = static_cast<std::uint32_t>(i + 1);
    if (atoms[i].starred) dfa.delta_[state * k + sym[i]] = state;
    add(state, follow(i + 1));
    if (is_last(i)) {
      dfa.accepting_[state] = 1;
      if (expr.outer_starred()) add(state, first);
    }
  }
  return dfa;
}

bool Dfa::accepts(std::string_view s, const Alphabet& alphabet) const {
  if (alphabet.size() != k_) throw Error("automaton and alphabet sizes differ");
  std::uint32_t state = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int a = alphabet.index_of(s[i]);
    if (a < 0)
      throw Error(std::string("symbol '") + s[i] + "' at position " + std::to_string(i + 1) +
                  " is not in alphabet " + alphabet.symbols());
    state = next(state, static_cast<std::size_t>(a));
  }
  return accepting(state);
}

bool Dfa::accepts_indices(const std::vector<std::uint8_t>& word) const {
  std::uint32_t state = 0;
  for (auto a : word) state = next(state, a);
  return accepting(state);
}

Dfa Dfa::minimized() const {
  const std::size_t n = state_count();
  // Drop unreachable states first.
  std::vector<int> reach(n, -1);
  std::vector<std::uint32_t> order;
  reach[0] = 0;
  order.push_back(0);
  for (std::size_t qi = 0; qi < order.size(); ++qi)
    for (std::size_t a = 0; a < k_; ++a) {
      const auto t = next(order[qi], a);
      if (reach[t] < 0) {
        reach[t] = static_cast<int>(order.size());
        order.push_back(t);
      }
    }

  // Moore refinement over reachable states.
  std::vector<std::uint32_t> block(n, 0);
  for (auto s : order) block[s] = accepting(s) ? 1 : 0;
  std::size_t blocks = 0;
  for (;;) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> sig_to_block;
    std::vector<std::uint32_t> next_block(n, 0);
    for (auto s : order) {
      std::vector<std::uint32_t> sig;
      sig.reserve(k_ + 1);
      sig.push_back(block[s]);
      for (std::size_t a = 0; a < k_; ++a) sig.push_back(block[next(s, a)]);
      const auto [it, inserted] = sig_to_block.emplace(std::move(sig), static_cast<std::uint32_t>(sig_to_block.size()));
      next_block[s] = it->second;
    }
    const std::size_t count = sig_to_block.size();
    block.swap(next_block);
    if (count == blocks) break;
    blocks = count;
  }

  // Breadth-first renumbering of blocks from the start block.
  std::vector<int> new_id(blocks, -1);
  std::vector<std::uint32_t> rep(blocks, 0);
  for (auto s : order) rep[block[s]] = s;
  std::vector<std::uint32_t> queue{block[0]};
  new_id[block[0]] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi)
    for (std::size_t a = 0; a < k_; ++a) {
      const auto b = block[next(rep[queue[qi]], a)];
      if (new_id[b] < 0) {
        new_id[b] = static_cast<int>(queue.size());
        queue.push_back(b);
      }
    }

  Dfa out;
  out.k_ = k_;
  out.delta_.assign(queue.size() * k_, 0);
  out.accepting_.assign(queue.size(), 0);
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const auto s = rep[queue[i]];
    out.accepting_[i] = accepting(s);
    for (std::size_t a = 0; a < k_; ++a)
      out.delta_[i * k_ + a] = static_cast<std::uint32_t>(new_id[block[next(s, a)]]);
  }
  return out;
}

std::string Dfa::canonical_key() const {
  std::string key;
  key.reserve(accepting_.size() * (k_ + 1));
  for (std::size_t s = 0; s < accepting_.size(); ++s) {
    key.push_back(accepting_[s] ? 'F' : 'N');
    for (std::size_t a = 0; a < k_; ++a) {
      key += std::to_string(delta_[s * k_ + a]);
      key.push_back(',');
    }
  }
  return key;
}

bool Dfa::empty_language() const {
  std::vector<std::uint8_t> seen(state_count(), 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    if (accepting(s)) return false;
    for (std::size_t a = 0; a < k_; ++a) {
      const auto t = next(s, a);
      if (!seen[t]) {
        seen[t] = 1;
        stack.push_back(t);
      }
    }
  }
  return true;
}

bool language_includes(const Dfa& super, const Dfa& sub) {
  if (super.symbol_count() != sub.symbol_count()) throw Error("language inclusion across different alphabets");
  const std::size_t k = super.symbol_count();
  const std::size_t ns = super.state_count();
  // A reachable product state accepted by `sub` but not by `super` is a counterexample.
  std::vector<std::uint8_t> seen(ns * sub.state_count(), 0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> stack{{0, 0}};
  seen[0] = 1;
  while (!stack.empty()) {
    const auto [p, q] = stack.back();
    stack.pop_back();
    if (sub.accepting(q) && !super.accepting(p)) return false;
    for (std::size_t a = 0; a < k; ++a) {
      const auto np = super.next(p, a), nq = sub.next(q, a);
      auto& mark = seen[nq * ns + np];
      if (!mark) {
        mark = 1;
        stack.emplace_back(np, nq);
      }
    }
  }
  return true;
}

bool language_includes(const PatternExpr& super, const PatternExpr& sub, const Alphabet& alphabet) {
  return language_includes(Dfa::compile(super, alphabet), Dfa::compile(sub, alphabet));
}

bool matches(const PatternExpr& expr, std::string_view s, const Alphabet& alphabet) {
  return Dfa::compile(expr, alphabet).accepts(s, alphabet);
}

}  // namespace gwm
