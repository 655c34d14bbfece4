#include "gwm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwm/error.hpp"
#include "gwm/quantile.hpp"

namespace gwm {

ValueCounts::ValueCounts(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw Error("sample contains a non-finite value");
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) {
    if (!entries_.empty() && entries_.back().first == v)
      ++entries_.back().second;
    else
      entries_.emplace_back(v, 1);
  }
  total_ = sorted.size();
}

void ValueCounts::add(double value, std::uint64_t count) {
  if (!std::isfinite(value)) throw Error("sample contains a non-finite value");
  if (count == 0) return;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), value,
                             [](const auto& e, double v) { return e.first < v; });
  if (it != entries_.end() && it->first == value)
    it->second += count;
  else
    entries_.insert(it, {value, count});
  total_ += count;
}

void ValueCounts::merge(const ValueCounts& other) {
  std::vector<std::pair<double, std::uint64_t>> out;
  out.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.cbegin();
  auto b = other.entries_.cbegin();
  while (a != entries_.cend() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.cend() && a->first < b->first)) {
      out.push_back(*a++);
    } else if (a == entries_.cend() || b->first < a->first) {
      out.push_back(*b++);
    } else {
      out.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  entries_ = std::move(out);
  total_ += other.total_;
}

std::vector<double> ValueCounts::expand() const {
  std::vector<double> out;
  out.reserve(total_);
  for (const auto& [v, c] : entries_) out.insert(out.end(), c, v);
  return out;
}

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::kExact: return "exact";
    case TestMethod::kNormalApproximation: return "normal-approximation";
    case TestMethod::kDegenerate: return "degenerate";
    case TestMethod::kOracle: return "oracle";
  }
  return "unknown";
}

namespace {

// Number of arrangements of n1 + n2 distinct ranks giving each U, for U = 0..n1*n2.
std::vector<double> exact_u_counts(std::uint64_t n1, std::uint64_t n2) {
  // table[i][j] holds the distribution for sizes (i, j); built row by row.
  const std::size_t max_u = n1 * n2;
  std::vector<std::vector<std::vector<double>>> table(n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t i = 0; i <= n1; ++i)
    for (std::size_t j = 0; j <= n2; ++j) {
      auto& dist = table[i][j];
      dist.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        dist[0] = 1.0;
        continue;
      }
      // The largest rank belongs to x (adds j to U) or to y.
      const auto& with_x = table[i - 1][j];
      const auto& with_y = table[i][j - 1];
      for (std::size_t u = 0; u < with_x.size(); ++u) dist[u + j] += with_x[u];
      for (std::size_t u = 0; u < with_y.size(); ++u) dist[u] += with_y[u];
    }
  auto out = table[n1][n2];
  out.resize(max_u + 1, 0.0);
  return out;
}

double normal_two_sided(double z) { return std::erfc(z / std::sqrt(2.0)); }

}  // namespace

TestResult mann_whitney(const ValueCounts& xs, const ValueCounts& ys, double alpha) {
  TestResult r;
  r.n1 = xs.size();
  r.n2 = ys.size();
  const double n1 = static_cast<double>(r.n1), n2 = static_cast<double>(r.n2);
  const double n = n1 + n2;

  // Midrank sum of xs and the tie term sum(t^3 - t).
  double rank_sum = 0.0, tie_term = 0.0, next_rank = 1.0;
  bool ties = false;
  auto a = xs.entries().begin(), b = ys.entries().begin();
  while (a != xs.entries().end() || b != ys.entries().end()) {
    double v;
    if (b == ys.entries().end() || (a != xs.entries().end() && a->first <= b->first))
      v = a->first;
    else
      v = b->first;
    double cx = 0, cy = 0;
    if (a != xs.entries().end() && a->first == v) cx = static_cast<double>((a++)->second);
    if (b != ys.entries().end() && b->first == v) cy = static_cast<double>((b++)->second);
    const double t = cx + cy;
    const double midrank = next_rank + (t - 1.0) / 2.0;
    rank_sum += cx * midrank;
    next_rank += t;
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
  }
  r.u = r.n1 == 0 ? 0.0 : rank_sum - n1 * (n1 + 1.0) / 2.0;

  if (r.n1 < 2 || r.n2 < 2) {
    r.method = TestMethod::kDegenerate;
    r.p_value = 1.0;
  } else if (!ties && r.n1 + r.n2 <= kExactMannWhitneyLimit) {
    r.method = TestMethod::kExact;
    const auto counts = exact_u_counts(r.n1, r.n2);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(r.u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) lower += counts[k];
      if (k >= u) upper += counts[k];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
  } else {
    r.method = TestMethod::kNormalApproximation;
    const double mean = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) {
      r.p_value = 1.0;
    } else {
      const double dev = std::max(0.0, std::abs(r.u - mean) - 0.5);
      r.p_value = std::min(1.0, normal_two_sided(dev / std::sqrt(var)));
    }
  }
  r.adjusted_p = r.p_value;
  r.rejected = r.adjusted_p < alpha;
  return r;
}

TestResult mann_whitney(std::span<const double> xs, std::span<const double> ys, double alpha) {
  return mann_whitney(ValueCounts(xs), ValueCounts(ys), alpha);
}

void ContingencyTable::validate() const {
  for (const auto& row : cells)
    for (auto c : row)
      if (c > 0) return;
  throw Error("contingency table has no positive cell");
}

double fisher_exact(const ContingencyTable& t) {
  t.validate();
  const auto a = t.cells[0][0], b = t.cells[0][1], c = t.cells[1][0], d = t.cells[1][1];
  const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c;
  const std::uint64_t lo = c1 > r2 ? c1 - r2 : 0;
  const std::uint64_t hi = std::min(r1, c1);
  // log C(r1, x) + log C(r2, c1 - x), up to a constant shared by all tables.
  auto log_weight = [&](std::uint64_t x) {
    auto lc = [](std::uint64_t n, std::uint64_t k) {
      return std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
             std::lgamma(static_cast<long double>(n - k) + 1);
    };
    return lc(r1, x) + lc(r2, c1 - x);
  };
  std::vector<long double> logs;
  long double max_log = -INFINITY;
  for (std::uint64_t x = lo; x <= hi; ++x) {
    logs.push_back(log_weight(x));
    max_log = std::max(max_log, logs.back());
  }
  long double total = 0, observed_sum = 0;
  std::vector<long double> w(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    w[i] = std::exp(logs[i] - max_log);
    total += w[i];
  }
  const long double observed = w[a - lo];
  for (auto wi : w)
    if (wi <= observed * (1 + 1e-7L)) observed_sum += wi;
  return std::min(1.0, static_cast<double>(observed_sum / total));
}

EffectSize odds_ratio(const ContingencyTable& t) {
  t.validate();
  double a = static_cast<double>(t.cells[0][0]), b = static_cast<double>(t.cells[0][1]);
  double c = static_cast<double>(t.cells[1][0]), d = static_cast<double>(t.cells[1][1]);
  EffectSize e;
  if (a == 0 || b == 0 || c == 0 || d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    e.correction_applied = true;
  }
  e.odds_ratio = (a * d) / (b * c);
  return e;
}

ContingencyTable dichotomize(std::span<const double> group_a, std::span<const double> group_b, double threshold) {
  if (!std::isfinite(threshold)) throw Error("dichotomization threshold must be finite");
  if (group_a.empty() && group_b.empty()) throw Error("cannot dichotomize two empty groups");
  ContingencyTable t;
  auto fill = [&](std::span<const double> g, std::size_t row) {
    for (double v : g) ++t.cells[row][v > threshold ? 1 : 0];
  };
  fill(group_a, 0);
  fill(group_b, 1);
  return t;
}

ContingencyTable dichotomize(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.empty() && group_b.empty()) throw Error("cannot dichotomize two empty groups");
  std::vector<double> pooled(group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());
  return dichotomize(group_a, group_b, median(pooled));
}

double bonferroni(double p_value, std::size_t family_size) {
  return std::min(1.0, p_value * static_cast<double>(std::max<std::size_t>(1, family_size)));
}

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t family_size) {
  if (family_size < p_values.size()) throw Error("Bonferroni family smaller than the number of p-values");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(bonferroni(p, family_size));
  return out;
}

}  // namespace gwm
