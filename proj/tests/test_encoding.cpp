#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gwm/encoding.hpp"
#include "gwm/error.hpp"
#include "gwm/quantile.hpp"

using namespace gwm;

namespace {

// Hand-rolled type 7 quantile: h = (n-1)p, interpolate between floor and ceil.
double interpolate(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

BinSpec table2_bins() {
  BinSpec b;
  b.thresholds = {7, 23};
  b.labels = "SML";
  return b;
}

}  // namespace

TEST_SUITE("encoding") {
  TEST_CASE("categorical maps positionwise") {
    const EncodingMap party{{"Alice", 'D'}, {"Bob", 'R'}, {"Carol", 'R'}};
    const std::vector<std::string> raw{"Alice", "Carol", "Bob"};
    CHECK(encode_categorical("x", raw, party).sequence == "DRR");

    const std::vector<std::string> one{"Alice"};
    CHECK(encode_categorical("y", one, {{"Alice", 'A'}}).sequence == "A");
  }

  TEST_CASE("categorical rejects unknown labels with their position") {
    const std::vector<std::string> raw{"Alice", "X"};
    try {
      encode_categorical("x", raw, {{"Alice", 'A'}});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }
  }

  TEST_CASE("quantile bins agree with a hand interpolation") {
    std::vector<double> v{8, 3, 1, 6, 2, 7, 5, 4};
    const std::vector<double> cuts{0.25, 0.5, 0.75};
    const auto bins = build_quantile_bins(v, cuts, "ABCD");
    REQUIRE(bins.thresholds.size() == 3);
    for (std::size_t i = 0; i < cuts.size(); ++i) CHECK(bins.thresholds[i] == doctest::Approx(interpolate(v, cuts[i])).epsilon(1e-12));
    CHECK(bins.thresholds[0] == doctest::Approx(2.75));
    CHECK(bins.thresholds[1] == doctest::Approx(4.5));
    CHECK(bins.thresholds[2] == doctest::Approx(6.25));
  }

  TEST_CASE("constant values give a degenerate threshold resolved by the boundary rule") {
    const std::vector<double> v(6, 5.0);
    const std::vector<double> cuts{0.5};
    auto lower = build_quantile_bins(v, cuts, "LH", BoundaryRule::kLowerInclusive);
    auto upper = build_quantile_bins(v, cuts, "LH", BoundaryRule::kUpperInclusive);
    CHECK(lower.thresholds[0] == 5.0);
    CHECK(lower.label_for(5.0) == 'H');
    CHECK(upper.label_for(5.0) == 'L');
  }

  TEST_CASE("quantile bin errors") {
    const std::vector<double> none;
    const std::vector<double> cuts{0.5};
    CHECK_THROWS_AS(build_quantile_bins(none, cuts, "AB"), Error);
    const std::vector<double> v{1, 2, 3};
    CHECK_THROWS_AS(build_quantile_bins(v, cuts, "AA"), Error);
  }

  TEST_CASE("release cycles encode as MLLL with the cycle-length bins") {
    const std::vector<double> cycles{21, 122, 81, 61};
    CHECK(encode_numeric("app", cycles, table2_bins()).sequence == "MLLL");
  }

  TEST_CASE("idle threshold splits at 133.49 hours") {
    BinSpec b;
    b.thresholds = {133.49};
    b.labels = "DC";  // below, at or above
    const std::vector<double> raw{150.0, 10.0};
    CHECK(encode_numeric("f", raw, b).sequence == "CD");
    CHECK(b.label_for(133.49) == 'C');
  }

  TEST_CASE("a single bin gives a one-letter itemset") {
    BinSpec b;
    b.labels = "A";
    const std::vector<double> raw{5};
    CHECK(encode_numeric("f", raw, b).sequence == "A");
  }

  TEST_CASE("non-finite values are rejected") {
    const std::vector<double> raw{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(encode_numeric("f", raw, table2_bins()), Error);
  }

  TEST_CASE("product encoding follows the pair table") {
    const ProductMap table{{{'L', 'A'}, 'U'}, {{'M', 'A'}, 'V'}, {{'H', 'A'}, 'W'},
                           {{'L', 'B'}, 'X'}, {{'M', 'B'}, 'Y'}, {{'H', 'B'}, 'Z'}};
    const auto out = encode_product({"s", "LHH"}, {"s", "AAB"}, table);
    CHECK(out.sequence == "UWZ");
    CHECK(encode_product({"s", "LHH"}, {"s", "AAB"}, table).sequence == out.sequence);

    CHECK(encode_product({"s", "A"}, {"s", "A"}, {{{'A', 'A'}, 'A'}}).sequence == "A");
    CHECK_THROWS_AS(encode_product({"s", "AB"}, {"s", "A"}, table), Error);
    CHECK_THROWS_AS(encode_product({"s", "LQ"}, {"s", "AA"}, table), Error);
  }

  TEST_CASE("encoding is positionwise and every value lands in exactly one bin") {
    const auto bins = table2_bins();
    std::vector<double> raw;
    for (double x = -3; x < 40; x += 0.5) raw.push_back(x);
    const auto whole = encode_numeric("f", raw, bins).sequence;
    REQUIRE(whole.size() == raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::vector<double> one{raw[i]};
      CHECK(encode_numeric("g", one, bins).sequence[0] == whole[i]);
      int hits = 0;
      const double lo[] = {-std::numeric_limits<double>::infinity(), 7, 23};
      const double hi[] = {7, 23, std::numeric_limits<double>::infinity()};
      for (int b = 0; b < 3; ++b) hits += raw[i] >= lo[b] && raw[i] < hi[b];
      CHECK(hits == 1);
    }
  }

  TEST_CASE("boundary rule only moves values on a threshold") {
    auto lower = table2_bins();
    auto upper = table2_bins();
    upper.boundary_rule = BoundaryRule::kUpperInclusive;
    for (double x = 0; x < 30; x += 0.25) {
      const bool on_threshold = x == 7 || x == 23;
      CHECK((lower.label_for(x) != upper.label_for(x)) == on_threshold);
    }
  }

  TEST_CASE("ingest reads well-formed files and keeps row order") {
    EncodingConfig cfg;
    cfg.alphabet = Alphabet("SML");
    const auto d = ingest_dataset_text("id,sequence,outcome\na,SML,1\nb,MM,2.5\nc,L,0\n", cfg);
    REQUIRE(d.size() == 3);
    CHECK(d.itemset(0).id == "a");
    CHECK(d.itemset(1).sequence == "MM");
    CHECK(d.outcome(1) == 2.5);
  }

  TEST_CASE("ingest errors carry line numbers") {
    EncodingConfig cfg;
    cfg.alphabet = Alphabet("AB");
    auto line_of = [&](const std::string& text) -> std::size_t {
      try {
        ingest_dataset_text(text, cfg);
      } catch (const ParseError& e) {
        return e.line();
      }
      return 0;
    };
    CHECK(line_of("id,sequence,outcome\na,AB,1\nb,,2\n") == 3);
    CHECK(line_of("id,sequence,outcome\na,AB,1\na,B,2\n") == 3);
    CHECK(line_of("id,sequence,outcome\na,AB,\n") == 2);
    CHECK(line_of("id,sequence,outcome\na,AC,1\n") == 2);
    CHECK(line_of("id,sequence\na,AB\n") == 1);
  }

  TEST_CASE("numeric rows are binned on ingest like encode_numeric") {
    EncodingConfig cfg;
    cfg.alphabet = Alphabet("SML");
    cfg.bins = table2_bins();
    const auto d = ingest_dataset_text("id,sequence,outcome\napp,21;122;81;61,4.5\nb,1;8,3\n", cfg);
    CHECK(d.itemset(0).sequence == "MLLL");
    const std::vector<double> raw{1, 8};
    CHECK(d.itemset(1).sequence == encode_numeric("b", raw, table2_bins()).sequence);
  }

  TEST_CASE("config JSON with quantile bins") {
    const auto cfg = EncodingConfig::from_json_text(
        R"({"alphabet": "LH", "quantile_bins": {"cuts": [0.5], "labels": "LH"}})");
    const auto d = ingest_dataset_text("id,sequence,outcome\na,1;2,0\nb,3;4,1\n", cfg);
    CHECK(d.itemset(0).sequence == "LL");
    CHECK(d.itemset(1).sequence == "HH");
  }
}
