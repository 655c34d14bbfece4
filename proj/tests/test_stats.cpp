#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gwm/error.hpp"
#include "gwm/stats.hpp"
#include "oracles.hpp"

using namespace gwm;

namespace {

ContingencyTable table(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  ContingencyTable t;
  t.cells = {{{a, b}, {c, d}}};
  return t;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("Mann-Whitney exact examples") {
    const std::vector<double> a{1, 2}, b{3, 4};
    auto r = mann_whitney(a, b);
    CHECK(r.u == 0.0);
    CHECK(r.method == TestMethod::kExact);
    CHECK(r.p_value == doctest::Approx(2.0 / 6.0).epsilon(1e-12));

    const std::vector<double> c{1, 2, 3}, d{4, 5, 6};
    r = mann_whitney(c, d);
    CHECK(r.u == 0.0);
    CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));

    const std::vector<double> e{5, 5, 5};
    r = mann_whitney(e, e);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.rejected);
  }

  TEST_CASE("degenerate samples cannot reject") {
    const std::vector<double> one{1}, many{2, 3, 4, 5};
    const auto r = mann_whitney(one, many);
    CHECK(r.method == TestMethod::kDegenerate);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.rejected);
    const std::vector<double> none;
    CHECK(mann_whitney(none, many).p_value == 1.0);
  }

  TEST_CASE("exact p matches the permutation oracle for every tie-free split up to n = 10") {
    const std::vector<double> pool{0.5, 1.25, 2, 3.5, 4, 5.75, 6, 7.5, 8, 9.25};
    std::size_t checked = 0;
    for (std::size_t n = 4; n <= pool.size(); ++n)
      for (std::size_t n1 = 2; n1 + 2 <= n; ++n1) {
        std::vector<bool> pick(n, false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), true);
        do {
          std::vector<double> xs, ys;
          for (std::size_t i = 0; i < n; ++i) (pick[i] ? xs : ys).push_back(pool[i]);
          const auto r = mann_whitney(xs, ys);
          REQUIRE(r.method == TestMethod::kExact);
          const double want = oracle::mann_whitney_permutation_p(xs, ys);
          if (std::abs(r.p_value - want) > 1e-12) FAIL_CHECK("n1=" << n1 << " n=" << n << " p=" << r.p_value << " want " << want);
          ++checked;
        } while (std::prev_permutation(pick.begin(), pick.end()));
      }
    CHECK(checked > 1000);
  }

  TEST_CASE("U identity and symmetry") {
    const std::vector<double> xs{1, 3, 3, 7, 9, 2}, ys{3, 4, 4, 8, 0};
    const auto a = mann_whitney(xs, ys), b = mann_whitney(ys, xs);
    CHECK(a.u + b.u == doctest::Approx(static_cast<double>(xs.size() * ys.size())));
    CHECK(a.u == doctest::Approx(oracle::u_statistic(xs, ys)));
    CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-14));
    CHECK(a.method == TestMethod::kNormalApproximation);
  }

  TEST_CASE("value counts give the same test as raw samples") {
    const std::vector<double> xs{1, 1, 2, 2, 2, 5, 5, 9}, ys{2, 3, 3, 3, 5, 7, 7, 7, 7, 8};
    const auto raw = mann_whitney(xs, ys);
    const auto counted = mann_whitney(ValueCounts(xs), ValueCounts(ys));
    CHECK(raw.u == counted.u);
    CHECK(raw.p_value == doctest::Approx(counted.p_value).epsilon(1e-14));
  }

  TEST_CASE("large separated samples reject") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
      xs.push_back(i);
      ys.push_back(100 + i);
    }
    const auto r = mann_whitney(xs, ys);
    CHECK(r.rejected);
    CHECK(r.p_value < 1e-10);
  }

  TEST_CASE("Fisher examples") {
    CHECK(fisher_exact(table(3, 1, 1, 3)) == doctest::Approx(34.0 / 70.0).epsilon(1e-12));
    CHECK(fisher_exact(table(4, 6, 4, 6)) == doctest::Approx(1.0));
    CHECK(fisher_exact(table(10, 0, 0, 10)) == doctest::Approx(2.0 / 184756.0).epsilon(1e-12));
  }

  TEST_CASE("Fisher matches hypergeometric enumeration on every table with N <= 12") {
    std::size_t checked = 0;
    for (std::uint64_t a = 0; a <= 12; ++a)
      for (std::uint64_t b = 0; a + b <= 12; ++b)
        for (std::uint64_t c = 0; a + b + c <= 12; ++c)
          for (std::uint64_t d = 0; a + b + c + d <= 12; ++d) {
            if (a + b + c + d == 0) continue;
            const double got = fisher_exact(table(a, b, c, d));
            const double want = oracle::fisher_enumeration_p(a, b, c, d);
            if (std::abs(got - want) > 1e-12) FAIL_CHECK(a << " " << b << " " << c << " " << d << ": " << got << " vs " << want);
            ++checked;
          }
    CHECK(checked == 1819);
  }

  TEST_CASE("Fisher is 1 for proportional rows") {
    CHECK(fisher_exact(table(2, 4, 4, 8)) == doctest::Approx(1.0));
    CHECK(fisher_exact(table(1, 3, 3, 9)) == doctest::Approx(1.0));
  }

  TEST_CASE("odds ratio") {
    auto e = odds_ratio(table(10, 90, 5, 95));
    CHECK(e.odds_ratio == doctest::Approx(950.0 / 450.0));
    CHECK_FALSE(e.correction_applied);
    CHECK(odds_ratio(table(3, 7, 3, 7)).odds_ratio == doctest::Approx(1.0));
    e = odds_ratio(table(5, 0, 3, 2));
    CHECK(e.odds_ratio == doctest::Approx(5.5 * 2.5 / (0.5 * 3.5)));
    CHECK(e.correction_applied);
    const auto t = table(4, 9, 7, 2);
    const auto swapped = table(7, 2, 4, 9);
    CHECK(odds_ratio(t).odds_ratio * odds_ratio(swapped).odds_ratio == doctest::Approx(1.0));
  }

  TEST_CASE("dichotomize counts outcomes above the threshold") {
    const std::vector<double> a{0, 0, 2}, b{3, 4, 5};
    const auto t = dichotomize(a, b, 1.0);
    CHECK(t.cells[0][0] == 2);
    CHECK(t.cells[0][1] == 1);
    CHECK(t.cells[1][0] == 0);
    CHECK(t.cells[1][1] == 3);
    const std::vector<double> same{1, 2, 3, 4};
    CHECK(odds_ratio(dichotomize(same, same)).odds_ratio == doctest::Approx(1.0));
    const std::vector<double> none;
    CHECK_THROWS_AS(dichotomize(none, none, 0.0), Error);
  }

  TEST_CASE("Bonferroni") {
    const std::vector<double> p{0.01, 0.02};
    const auto adj = bonferroni(p, 2);
    CHECK(adj[0] == doctest::Approx(0.02));
    CHECK(adj[1] == doctest::Approx(0.04));
    CHECK(bonferroni(0.9, 5) == 1.0);
    CHECK(bonferroni(0.004, 13) == doctest::Approx(0.052));
    CHECK(0.004 < 0.05);
    CHECK_FALSE(bonferroni(0.004, 13) < 0.05);
    for (double q = 0; q <= 1.0; q += 0.01)
      for (std::size_t m = 1; m < 20; ++m) {
        CHECK(bonferroni(q, m) >= q);
        CHECK(bonferroni(q, m) <= 1.0);
      }
  }
}
