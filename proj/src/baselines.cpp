#include "gwm/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "gwm/csv.hpp"
#include "gwm/encoding.hpp"
#include "gwm/error.hpp"

namespace gwm {

namespace {

using Counts = std::array<unsigned, 256>;

Counts count_symbols(const std::string& s) {
  Counts c{};
  for (unsigned char ch : s) ++c[ch];
  return c;
}

bool contains(const Counts& transaction, const std::string& items) {
  Counts need{};
  for (unsigned char ch : items)
    if (++need[ch] > transaction[ch]) return false;
  return true;
}

}  // namespace

std::vector<FrequentItemset> apriori_frequent_itemsets(std::span<const std::string> transactions, double min_support,
                                                       std::size_t max_len) {
  if (transactions.empty()) throw Error("apriori needs at least one transaction");
  if (!(min_support > 0.0 && min_support <= 1.0)) throw Error("min_support must lie in (0, 1]");
  if (max_len == 0) throw Error("max_len must be at least 1");

  std::vector<Counts> counts;
  for (const auto& t : transactions) {
    if (t.empty()) throw Error("empty transaction");
    counts.push_back(count_symbols(t));
  }
  const double n = static_cast<double>(transactions.size());
  const auto min_count = static_cast<std::size_t>(std::max(1.0, std::ceil(min_support * n - 1e-9)));

  std::vector<FrequentItemset> out;
  auto count_level = [&](const std::vector<std::string>& candidates) {
    std::vector<std::string> frequent;
    for (const auto& c : candidates) {
      std::size_t k = 0;
      for (const auto& t : counts) k += contains(t, c);
      if (k < min_count) continue;
      out.push_back({c, k, static_cast<double>(k) / n});
      frequent.push_back(c);
    }
    return frequent;
  };

  std::set<char> symbols;
  for (const auto& t : transactions) symbols.insert(t.begin(), t.end());
  std::vector<std::string> level;
  for (char s : symbols) level.emplace_back(1, s);
  level = count_level(level);

  for (std::size_t k = 1; k < max_len && !level.empty(); ++k) {
    const std::set<std::string> known(level.begin(), level.end());
    std::vector<std::string> candidates;
    // Join itemsets sharing all but their last symbol; a multiset may join itself.
    for (std::size_t i = 0; i < level.size(); ++i)
      for (std::size_t j = i; j < level.size(); ++j) {
        const auto& a = level[i];
        const auto& b = level[j];
        if (a.compare(0, k - 1, b, 0, k - 1) != 0) break;
        std::string c = a + b.back();
        bool closed = true;
        for (std::size_t drop = 0; drop < c.size() && closed; ++drop) {
          std::string sub = c;
          sub.erase(drop, 1);
          closed = known.count(sub) > 0;
        }
        if (closed) candidates.push_back(std::move(c));
      }
    level = count_level(candidates);
  }
  return out;
}

std::string itemset_label(const std::string& items) {
  std::string out = "{";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out + "}";
}

std::string itemsets_to_csv(std::span<const FrequentItemset> itemsets) {
  std::string out = "itemset,size,count,support\n";
  for (const auto& f : itemsets)
    out += csv::escape(itemset_label(f.items)) + "," + std::to_string(f.items.size()) + "," +
           std::to_string(f.count) + "," + format_number(f.support) + "\n";
  return out;
}

}  // namespace gwm
