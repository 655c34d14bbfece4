#pragma once

// Independent reference implementations used as test oracles. None of them
// shares code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Pattern texts of the grammar are valid ECMAScript regexes as they stand.
inline bool regex_matches(const std::string& pattern, const std::string& s) {
  return std::regex_match(s, std::regex(pattern));
}

// All non-empty strings over `symbols` up to length `max_len`.
inline std::vector<std::string> all_strings(const std::string& symbols, std::size_t max_len) {
  std::vector<std::string> out, frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& p : frontier)
      for (char c : symbols) next.push_back(p + c);
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

inline double u_statistic(const std::vector<double>& xs, const std::vector<double>& ys) {
  double u = 0;
  for (double x : xs)
    for (double y : ys) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

// Two-sided permutation p: share of all splits of the pooled sample whose U
// lies at least as far from n1*n2/2 as the observed one.
inline double mann_whitney_permutation_p(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const std::size_t n = pooled.size(), n1 = xs.size();
  const double centre = static_cast<double>(xs.size() * ys.size()) / 2.0;
  const double observed = std::abs(u_statistic(xs, ys) - centre);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), true);
  std::uint64_t total = 0, extreme = 0;
  do {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? a : b).push_back(pooled[i]);
    ++total;
    if (std::abs(u_statistic(a, b) - centre) >= observed - 1e-9) ++extreme;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

inline long double choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  long double r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  return r;
}

// Two-sided Fisher p by summing every table with the observed margins whose
// hypergeometric probability does not exceed the observed one.
inline double fisher_enumeration_p(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
  auto prob = [&](std::uint64_t x) { return choose(r1, x) * choose(r2, c1 - x) / choose(n, c1); };
  const long double observed = prob(a);
  long double p = 0;
  const std::uint64_t lo = c1 > r2 ? c1 - r2 : 0, hi = std::min(r1, c1);
  for (std::uint64_t x = lo; x <= hi; ++x) {
    const long double q = prob(x);
    if (q <= observed * (1 + 1e-9L)) p += q;
  }
  return static_cast<double>(std::min<long double>(1, p));
}

// Frequent sub-multisets by enumerating every sub-multiset of every transaction.
inline std::map<std::string, std::size_t> apriori_brute_force(const std::vector<std::string>& transactions,
                                                              double min_support, std::size_t max_len) {
  std::map<std::string, std::set<std::size_t>> seen;
  for (std::size_t t = 0; t < transactions.size(); ++t) {
    std::string s = transactions[t];
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      std::string sub;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) sub += s[i];
      if (sub.size() <= max_len) seen[sub].insert(t);
    }
  }
  std::map<std::string, std::size_t> out;
  const double n = static_cast<double>(transactions.size());
  for (const auto& [items, ts] : seen)
    if (static_cast<double>(ts.size()) / n >= min_support - 1e-12) out[items] = ts.size();
  return out;
}

}  // namespace oracle
