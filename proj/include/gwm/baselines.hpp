#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gwm {

/// A multiset of symbols, kept as its sorted symbol string ("AAB" is {A,A,B}).
struct FrequentItemset {
  std::string items;
  std::size_t count = 0;  // transactions containing the multiset
  double support = 0.0;
};

/// Level-wise Apriori over multisets: a transaction contains an itemset when
/// it has at least as many copies of every symbol. Symbol order inside
/// transactions is ignored. Results are ordered by size, then items.
std::vector<FrequentItemset> apriori_frequent_itemsets(std::span<const std::string> transactions, double min_support,
                                                       std::size_t max_len);

/// `{A,A,B}`
std::string itemset_label(const std::string& items);

/// `itemset,size,count,support`
std::string itemsets_to_csv(std::span<const FrequentItemset> itemsets);

}  // namespace gwm
