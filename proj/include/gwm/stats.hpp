#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gwm {

/// Multiset of real outcomes stored as ascending (value, count) pairs.
///
/// Rank statistics only need the merged order of two samples, so groups
/// that grow by repeated merging stay compact when values repeat.
class ValueCounts {
public:
  ValueCounts() = default;
  explicit ValueCounts(std::span<const double> values);

  void add(double value, std::uint64_t count = 1);
  void merge(const ValueCounts& other);

  std::uint64_t size() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }
  const std::vector<std::pair<double, std::uint64_t>>& entries() const noexcept { return entries_; }
  std::vector<double> expand() const;

private:
  std::vector<std::pair<double, std::uint64_t>> entries_;
  std::uint64_t total_ = 0;
};

enum class TestMethod { kExact, kNormalApproximation, kDegenerate, kOracle };

std::string to_string(TestMethod m);

struct TestResult {
  double u = 0.0;  // Mann-Whitney U of the first sample
  double p_value = 1.0;
  double adjusted_p = 1.0;  // equal to p_value until a correction is applied
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  TestMethod method = TestMethod::kDegenerate;
  bool rejected = false;  // adjusted_p < alpha
};

/// Two-sided Mann-Whitney U test.
///
/// Exact null distribution when n1 + n2 <= 16 and there are no ties;
/// otherwise the normal approximation with tie-corrected variance and a 0.5
/// continuity correction. If either sample has fewer than two observations
/// the test cannot reject: p = 1, method kDegenerate.
TestResult mann_whitney(std::span<const double> xs, std::span<const double> ys, double alpha = 0.05);
TestResult mann_whitney(const ValueCounts& xs, const ValueCounts& ys, double alpha = 0.05);

inline constexpr std::uint64_t kExactMannWhitneyLimit = 16;

/// 2x2 counts: rows are groups, columns are [not above, above] the threshold.
struct ContingencyTable {
  std::array<std::array<std::uint64_t, 2>, 2> cells{};

  void validate() const;
};

/// Two-sided Fisher exact test: sums the probabilities of all tables with the
/// observed margins that are no more likely than the observed one.
double fisher_exact(const ContingencyTable& t);

struct EffectSize {
  double odds_ratio = 1.0;
  bool correction_applied = false;
};

/// Cross-product ratio; adds 0.5 to every cell when any cell is zero.
EffectSize odds_ratio(const ContingencyTable& t);

/// Counts per group of outcomes strictly above `threshold`.
ContingencyTable dichotomize(std::span<const double> group_a, std::span<const double> group_b, double threshold);
/// Same, thresholded at the pooled median.
ContingencyTable dichotomize(std::span<const double> group_a, std::span<const double> group_b);

/// min(1, p * family_size) for every p.
std::vector<double> bonferroni(std::span<const double> p_values, std::size_t family_size);
double bonferroni(double p_value, std::size_t family_size);

}  // namespace gwm
