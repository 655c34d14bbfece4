#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "gwm/report.hpp"

using namespace gwm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GWM_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gwm_report_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig sample_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.encoding = EncodingConfig::from_file(kData / "ml-sample" / "config.json");
  cfg.input = kData / "ml-sample" / "dataset.csv";
  cfg.hierarchy = kData / "ml-sample" / "hierarchy.csv";
  cfg.oracle = kData / "ml-sample" / "oracle.json";
  cfg.out_dir = out;
  return cfg;
}

Dataset numbers(const std::vector<std::pair<std::string, double>>& rows) {
  Dataset d(Alphabet("AB"));
  for (const auto& [id, y] : rows) d.add({id, "A"}, y);
  return d;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("five-number identity") {
    const std::vector<double> v{5, 3, 1, 4, 2};
    const auto b = boxplot_stats(v, "x");
    CHECK(b.count == 5);
    CHECK(b.min == 1);
    CHECK(b.q1 == 2);
    CHECK(b.median == 3);
    CHECK(b.q3 == 4);
    CHECK(b.max == 5);
    CHECK(b.whisker_low == 1);
    CHECK(b.whisker_high == 5);
    CHECK(b.outliers.empty());
  }

  TEST_CASE("a far value is an outlier") {
    const std::vector<double> v{1, 1, 1, 1, 100};
    const auto b = boxplot_stats(v);
    CHECK(b.q1 == 1);
    CHECK(b.q3 == 1);
    CHECK(b.whisker_high == 1);
    CHECK(b.outliers == std::vector<double>{100});
  }

  TEST_CASE("fences against a hand computation") {
    // q1 = 2.5, q3 = 7.75, IQR 5.25: fences at -5.375 and 15.625
    const std::vector<double> v{-10, 1, 2, 4, 5, 6, 7, 8, 12, 30};
    const auto b = boxplot_stats(v);
    CHECK(b.q1 == doctest::Approx(2.5));
    CHECK(b.q3 == doctest::Approx(7.75));
    CHECK(b.whisker_low == 1);
    CHECK(b.whisker_high == 12);
    CHECK(b.outliers == std::vector<double>{-10, 30});
  }

  TEST_CASE("compare [1,2] against [3,4]") {
    const auto d = numbers({{"a1", 1}, {"a2", 2}, {"b1", 3}, {"b2", 4}});
    const std::vector<std::string> a{"a1", "a2"}, b{"b1", "b2"};
    const auto c = compare_treatments(a, b, d, SynthesisConfig{});
    CHECK(c.mann_whitney.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(c.mann_whitney.u == 0.0);
    CHECK(c.threshold == doctest::Approx(2.5));
    CHECK(c.a.count == 2);
    CHECK(c.b.mean == doctest::Approx(3.5));
    const auto json = nlohmann::json::parse(comparison_to_json(c));
    CHECK(json.contains("mann_whitney"));
  }

  TEST_CASE("copies of the same outcomes do not differ") {
    const auto d = numbers({{"a1", 1}, {"a2", 2}, {"a3", 3}, {"b1", 1}, {"b2", 2}, {"b3", 3}});
    const std::vector<std::string> a{"a1", "a2", "a3"}, b{"b1", "b2", "b3"};
    const auto c = compare_treatments(a, b, d, SynthesisConfig{});
    CHECK(c.mann_whitney.p_value == doctest::Approx(1.0));
    CHECK(c.fisher_p == doctest::Approx(1.0));
    CHECK(c.effect.odds_ratio == doctest::Approx(1.0));
  }

  TEST_CASE("compare rejects overlap, empty groups and unknown ids") {
    const auto d = numbers({{"a", 1}, {"b", 2}});
    const std::vector<std::string> a{"a"}, ab{"a", "b"}, none{}, ghost{"zz"};
    CHECK_THROWS_AS(compare_treatments(a, ab, d, SynthesisConfig{}), Error);
    CHECK_THROWS_AS(compare_treatments(a, none, d, SynthesisConfig{}), Error);
    CHECK_THROWS_AS(compare_treatments(a, ghost, d, SynthesisConfig{}), Error);
  }

  TEST_CASE("report over the six-node fixture reconciles with the TrOCs") {
    auto fx = fixture::ml_sample();
    const auto t = synthesize(fx.hierarchy, classify_all(fx.hierarchy, fx.data), fx.data, SynthesisConfig{}, &fx.oracle);
    const auto contract = verify_output_contract(t, fx.hierarchy, fx.data, SynthesisConfig{}, &fx.oracle);
    const auto json = nlohmann::json::parse(report_to_json(t, fx.hierarchy, fx.data, SynthesisConfig{}, contract));
    CHECK(json["rows"] == fx.data.size());
    REQUIRE(json["trocs"].size() == t.trocs.size());
    double share = 0;
    std::size_t n = 0;
    for (const auto& row : json["trocs"]) {
      share += row["share"].get<double>();
      n += row["n"].get<std::size_t>();
    }
    CHECK(share == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(n == fx.data.size());
    CHECK(json["contract"]["ok"] == contract.ok());

    const auto boxes = emit_boxplot_stats(t, fx.data);
    REQUIRE(boxes.size() == t.trocs.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      CHECK(boxes[i].pattern == t.trocs[i].pattern);
      CHECK(boxes[i].count == t.trocs[i].summary.count);
      CHECK(boxes[i].median == doctest::Approx(t.trocs[i].summary.median));
      CHECK(boxes[i].min == t.trocs[i].summary.min);
      CHECK(boxes[i].max == t.trocs[i].summary.max);
    }
  }

  TEST_CASE("pipeline on the bundled M/L sample") {
    const auto out = scratch_dir("ml");
    auto cfg = sample_config(out);
    cfg.svg = true;
    const auto r = run_pipeline(cfg);
    CHECK(r.contract.ok());
    std::vector<std::string> patterns;
    for (const auto& x : r.trocs.trocs) patterns.push_back(x.pattern);
    CHECK(patterns == std::vector<std::string>{"(M*L*)*", "M*L"});
    for (auto f : {"report.json", "trocs.csv", "trace.jsonl", "boxplots.json", "boxplots.svg"}) CHECK(fs::exists(out / f));
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report["trace"]["steps"] == 7);
    CHECK(nlohmann::json::parse(slurp(out / "boxplots.json"))["boxplots"].size() == 2);
    CHECK(slurp(out / "boxplots.svg").rfind("<svg", 0) == 0);
    // adjacent survivors differ
    for (const auto& p : report["adjacent_pairs"])
      if (p["tested"].get<bool>()) CHECK(p["rejected"].get<bool>());
  }

  TEST_CASE("pipeline runs are byte-identical") {
    const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
    run_pipeline(sample_config(a));
    run_pipeline(sample_config(b));
    for (auto f : {"report.json", "trocs.csv", "trace.jsonl", "boxplots.json"}) CHECK(slurp(a / f) == slurp(b / f));
  }

  TEST_CASE("malformed input fails in the ingest stage with the line") {
    const auto dir = scratch_dir("bad");
    {
      std::ofstream(dir / "bad.csv") << "id,sequence,outcome\na,ML,1\nb,ML\n";
    }
    auto cfg = sample_config({});
    cfg.input = dir / "bad.csv";
    try {
      run_pipeline(cfg);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("a hierarchy file over another alphabet is refused") {
    CHECK_THROWS_AS(load_or_enumerate(Alphabet("AB"), kData / "ml-sample" / "hierarchy.csv"), Error);
    CHECK(load_or_enumerate(Alphabet("AB"), std::nullopt).size() == 19);
  }
}
