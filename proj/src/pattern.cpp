#include "gwm/pattern.hpp"

#include <algorithm>
#include <set>

#include "gwm/error.hpp"

namespace gwm {

PatternExpr::PatternExpr(std::vector<Atom> atoms, bool outer_starred)
    : atoms_(std::move(atoms)), outer_starred_(outer_starred) {
  if (atoms_.empty()) throw Error("pattern needs at least one symbol");
  std::set<char> seen;
  for (const auto& a : atoms_) {
    if (a.symbol == '(' || a.symbol == ')' || a.symbol == '*')
      throw Error(std::string("'") + a.symbol + "' cannot be a pattern symbol");
    if (!seen.insert(a.symbol).second)
      throw Error(std::string("symbol '") + a.symbol + "' repeats within a pattern");
  }
}

PatternExpr PatternExpr::parse(std::string_view text) {
  std::string_view body = text;
  bool outer = false;
  if (!body.empty() && body.front() == '(') {
    if (body.size() >= 3 && body.substr(body.size() - 2) == ")*") {
      outer = true;
      body = body.substr(1, body.size() - 3);
    } else if (body.back() == ')') {
      body = body.substr(1, body.size() - 2);
    } else {
      throw Error("unbalanced parenthesis in pattern '" + std::string(text) + "'");
    }
  }
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '(' || c == ')' || c == '*')
      throw Error("unexpected '" + std::string(1, c) + "' in pattern '" + std::string(text) + "'");
    const bool starred = i + 1 < body.size() && body[i + 1] == '*';
    atoms.push_back({c, starred});
    if (starred) ++i;
  }
  if (atoms.empty()) throw Error("empty pattern '" + std::string(text) + "'");
  return PatternExpr(std::move(atoms), outer);
}

std::size_t PatternExpr::star_count() const noexcept {
  std::size_t n = outer_starred_ ? 1 : 0;
  for (const auto& a : atoms_) n += a.starred;
  return n;
}

bool PatternExpr::nullable() const noexcept {
  return outer_starred_ || std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.starred; });
}

std::string PatternExpr::text() const {
  std::string body;
  for (const auto& a : atoms_) {
    body.push_back(a.symbol);
    if (a.starred) body.push_back('*');
  }
  return outer_starred_ ? "(" + body + ")*" : body;
}

unsigned PatternExpr::symbol_mask(const Alphabet& alphabet) const {
  unsigned mask = 0;
  for (const auto& a : atoms_) {
    const int i = alphabet.index_of(a.symbol);
    if (i < 0) throw Error(std::string("symbol '") + a.symbol + "' is not in alphabet " + alphabet.symbols());
    mask |= 1u << i;
  }
  return mask;
}

bool canonical_text_less(std::string_view a, std::string_view b, const Alphabet& alphabet) {
  auto rank = [&](char c) -> int {
    if (c == '(') return 0;
    const int i = alphabet.index_of(c);
    if (i >= 0) return 1 + i;
    if (c == '*') return 1000;
    if (c == ')') return 1001;
    return 2000 + static_cast<unsigned char>(c);
  };
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int ra = rank(a[i]), rb = rank(b[i]);
    if (ra != rb) return ra < rb;
  }
  return a.size() < b.size();
}

}  // namespace gwm
