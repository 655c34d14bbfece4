#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gwm/alphabet.hpp"
#include "gwm/pattern.hpp"

namespace gwm {

/// Complete deterministic automaton over alphabet positions 0..k-1.
///
/// State 0 is the start state. Transitions are stored row-major
/// (`next(s, a) = delta[s * k + a]`), so every state has an outgoing edge on
/// every symbol; a rejecting sink absorbs missing moves.
class Dfa {
public:
  Dfa() = default;

  /// Position automaton of `expr`. Symbols within a pattern are distinct, so
  /// the construction is deterministic without a subset step.
  static Dfa compile(const PatternExpr& expr, const Alphabet& alphabet);

  std::size_t state_count() const noexcept { return accepting_.size(); }
  std::size_t symbol_count() const noexcept { return k_; }
  std::uint32_t next(std::uint32_t state, std::size_t symbol) const { return delta_[state * k_ + symbol]; }
  bool accepting(std::uint32_t state) const { return accepting_[state] != 0; }

  /// Runs the automaton on `s`, throwing on a symbol outside `alphabet`.
  bool accepts(std::string_view s, const Alphabet& alphabet) const;
  /// Runs on alphabet positions; no validation.
  bool accepts_indices(const std::vector<std::uint8_t>& word) const;

  /// Minimal complete automaton with states renumbered in breadth-first
  /// order from the start state, so equal languages give identical objects.
  Dfa minimized() const;

  /// Serialization of a minimized automaton; equal iff languages are equal.
  std::string canonical_key() const;

  bool empty_language() const;

  friend bool operator==(const Dfa&, const Dfa&) = default;

private:
  std::size_t k_ = 0;
  std::vector<std::uint32_t> delta_;
  std::vector<std::uint8_t> accepting_;
};

/// True iff L(sub) is a subset of L(super). Both must share an alphabet.
bool language_includes(const Dfa& super, const Dfa& sub);

bool language_includes(const PatternExpr& super, const PatternExpr& sub, const Alphabet& alphabet);

bool matches(const PatternExpr& expr, std::string_view s, const Alphabet& alphabet);

}  // namespace gwm
