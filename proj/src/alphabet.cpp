#include "gwm/alphabet.hpp"

#include <cctype>

#include "gwm/error.hpp"

namespace gwm {

Alphabet::Alphabet(std::string_view symbols) : symbols_(symbols) {
  if (symbols_.empty()) throw Error("alphabet must contain at least one symbol");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(symbols_[i]);
    if (std::isspace(c) || c == '(' || c == ')' || c == '*' || c == ';' || c == ',')
      throw Error(std::string("alphabet symbol '") + symbols_[i] + "' is reserved");
    if (index_[c] >= 0) throw Error(std::string("duplicate alphabet symbol '") + symbols_[i] + "'");
    index_[c] = static_cast<int>(i);
  }
}

std::size_t Alphabet::find_foreign(std::string_view s) const noexcept {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!contains(s[i])) return i;
  return std::string_view::npos;
}

void Alphabet::require_over(std::string_view s) const {
  const auto pos = find_foreign(s);
  if (pos != std::string_view::npos)
    throw Error(std::string("symbol '") + s[pos] + "' at position " + std::to_string(pos + 1) +
                " is not in alphabet " + symbols_);
}

}  // namespace gwm
