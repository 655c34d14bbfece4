#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace gwm {

/// Ordered set of distinct single-character symbols.
///
/// The construction order is the canonical order used by every downstream
/// ordering (node text comparison, product tables, hierarchy ids). Five
/// symbols is the supported size for hierarchy enumeration; larger
/// alphabets are accepted and reported through `over_soft_limit()`.
class Alphabet {
public:
  static constexpr std::size_t kSoftLimit = 5;

  Alphabet() = default;
  explicit Alphabet(std::string_view symbols);

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbols() const noexcept { return symbols_; }
  char operator[](std::size_t i) const { return symbols_[i]; }

  bool contains(char c) const noexcept { return index_[static_cast<unsigned char>(c)] >= 0; }
  /// Position of `c` in the alphabet, or -1.
  int index_of(char c) const noexcept { return index_[static_cast<unsigned char>(c)]; }

  bool over_soft_limit() const noexcept { return symbols_.size() > kSoftLimit; }

  /// Position of the first character of `s` not in the alphabet, or npos.
  std::size_t find_foreign(std::string_view s) const noexcept;
  /// Throws gwm::Error naming the 1-based position of a foreign symbol.
  void require_over(std::string_view s) const;

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

private:
  std::string symbols_;
  std::array<int, 256> index_ = make_empty_index();

  static std::array<int, 256> make_empty_index() {
    std::array<int, 256> idx{};
    idx.fill(-1);
    return idx;
  }
};

}  // namespace gwm
