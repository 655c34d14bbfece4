#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gwm/alphabet.hpp"

namespace gwm {

struct Atom {
  char symbol;
  bool starred;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Restricted regular expression: an ordered selection of distinct symbols,
/// each optionally starred, the whole optionally wrapped in one starred group.
///
/// Text form: `A*B`, `(AB*)*`. Nested or partial grouping is not part of the
/// grammar.
class PatternExpr {
public:
  PatternExpr(std::vector<Atom> atoms, bool outer_starred);

  /// Parses the canonical text form. `(A*B)` without a trailing star is
  /// accepted as the plain body `A*B`.
  static PatternExpr parse(std::string_view text);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  bool outer_starred() const noexcept { return outer_starred_; }

  std::size_t star_count() const noexcept;
  /// True iff the empty string is in the language.
  bool nullable() const noexcept;
  std::string text() const;
  /// Bitmask over alphabet positions of the symbols used.
  unsigned symbol_mask(const Alphabet& alphabet) const;

  friend bool operator==(const PatternExpr&, const PatternExpr&) = default;

private:
  std::vector<Atom> atoms_;
  bool outer_starred_;
};

/// Orders pattern texts character by character with '(' first, then the
/// alphabet symbols in alphabet order, then '*' and ')'. Shorter prefixes
/// come first.
bool canonical_text_less(std::string_view a, std::string_view b, const Alphabet& alphabet);

}  // namespace gwm
