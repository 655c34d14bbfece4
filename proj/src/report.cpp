#include "gwm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gwm/quantile.hpp"

namespace gwm {

using nlohmann::json;

namespace {

json summary_json(const OutcomeSummary& s) {
  return json{{"count", s.count}, {"share", s.share}, {"mean", s.mean}, {"min", s.min}, {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

json result_json(const TestResult& r) {
  return json{{"u", r.u},       {"n1", r.n1},
              {"n2", r.n2},     {"method", to_string(r.method)},
              {"p", r.p_value}, {"adjusted_p", r.adjusted_p},
              {"rejected", r.rejected}};
}

std::vector<double> rows_outcomes(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(data.outcome(r));
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

BoxplotStats boxplot_stats(std::span<const double> outcomes, std::string pattern) {
  if (outcomes.empty()) throw Error("boxplot of an empty sample");
  std::vector<double> v(outcomes.begin(), outcomes.end());
  std::sort(v.begin(), v.end());
  BoxplotStats b;
  b.pattern = std::move(pattern);
  b.count = v.size();
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, x);
    b.whisker_high = std::max(b.whisker_high, x);
  }
  return b;
}

std::vector<BoxplotStats> emit_boxplot_stats(const TrocSet& trocs, const Dataset& data) {
  std::vector<BoxplotStats> out;
  for (const auto& t : trocs.trocs)
    if (!t.rows.empty()) out.push_back(boxplot_stats(rows_outcomes(data, t.rows), t.pattern));
  return out;
}

std::string boxplots_to_json(std::span<const BoxplotStats> boxes) {
  json arr = json::array();
  for (const auto& b : boxes)
    arr.push_back(json{{"pattern", b.pattern},
                       {"count", b.count},
                       {"min", b.min},
                       {"q1", b.q1},
                       {"median", b.median},
                       {"q3", b.q3},
                       {"max", b.max},
                       {"whisker_low", b.whisker_low},
                       {"whisker_high", b.whisker_high},
                       {"outliers", b.outliers}});
  return json{{"boxplots", arr}}.dump(2) + "\n";
}

std::string boxplots_to_svg(std::span<const BoxplotStats> boxes) {
  const double label_w = 160, plot_w = 480, row_h = 36, top = 20;
  const double width = label_w + plot_w + 40, height = top * 2 + row_h * static_cast<double>(boxes.size()) + 20;
  double lo = 0, hi = 1;
  if (!boxes.empty()) {
    lo = boxes[0].min;
    hi = boxes[0].max;
    for (const auto& b : boxes) {
      lo = std::min(lo, b.min);
      hi = std::max(hi, b.max);
    }
  }
  if (hi <= lo) hi = lo + 1;
  auto x = [&](double v) { return fmt(label_w + (v - lo) / (hi - lo) * plot_w); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cy = top + row_h * (static_cast<double>(i) + 0.5);
    const std::string y0 = fmt(cy - 10), y1 = fmt(cy + 10), yc = fmt(cy);
    s += "  <text x=\"4\" y=\"" + fmt(cy + 4) + "\">" + xml_escape(b.pattern) + " (n=" + std::to_string(b.count) +
         ")</text>\n";
    s += "  <line x1=\"" + x(b.whisker_low) + "\" y1=\"" + yc + "\" x2=\"" + x(b.q1) + "\" y2=\"" + yc +
         "\" stroke=\"black\"/>\n";
    s += "  <line x1=\"" + x(b.q3) + "\" y1=\"" + yc + "\" x2=\"" + x(b.whisker_high) + "\" y2=\"" + yc +
         "\" stroke=\"black\"/>\n";
    s += "  <rect x=\"" + x(b.q1) + "\" y=\"" + y0 + "\" width=\"" +
         fmt((b.q3 - b.q1) / (hi - lo) * plot_w) + "\" height=\"20\" fill=\"#cde\" stroke=\"black\"/>\n";
    s += "  <line x1=\"" + x(b.median) + "\" y1=\"" + y0 + "\" x2=\"" + x(b.median) + "\" y2=\"" + y1 +
         "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers)
      s += "  <circle cx=\"" + x(o) + "\" cy=\"" + yc + "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
  }
  const std::string axis_y = fmt(top + row_h * static_cast<double>(boxes.size()) + 4);
  s += "  <line x1=\"" + x(lo) + "\" y1=\"" + axis_y + "\" x2=\"" + x(hi) + "\" y2=\"" + axis_y +
       "\" stroke=\"gray\"/>\n";
  s += "  <text x=\"" + x(lo) + "\" y=\"" + fmt(top + row_h * static_cast<double>(boxes.size()) + 18) + "\">" +
       format_number(lo) + "</text>\n";
  s += "  <text x=\"" + x(hi) + "\" y=\"" + fmt(top + row_h * static_cast<double>(boxes.size()) + 18) +
       "\" text-anchor=\"end\">" + format_number(hi) + "</text>\n";
  return s + "</svg>\n";
}

Comparison compare_treatments(std::span<const std::string> a_ids, std::span<const std::string> b_ids,
                              const Dataset& data, const SynthesisConfig& config) {
  config.validate();
  if (a_ids.empty() || b_ids.empty()) throw Error("both groups need at least one itemset");
  auto lookup = [&](std::span<const std::string> ids, std::set<std::size_t>& rows) {
    std::vector<double> out;
    for (const auto& id : ids) {
      auto row = data.find(id);
      if (!row) throw Error("unknown itemset id '" + id + "'");
      if (!rows.insert(*row).second) throw Error("itemset '" + id + "' listed twice");
      out.push_back(data.outcome(*row));
    }
    return out;
  };
  std::set<std::size_t> a_rows, b_rows;
  const auto a = lookup(a_ids, a_rows);
  const auto b = lookup(b_ids, b_rows);
  for (auto r : a_rows)
    if (b_rows.count(r)) throw Error("itemset '" + data.itemset(r).id + "' is in both groups");

  Comparison c;
  c.mann_whitney = config.test ? config.test(ValueCounts(a), ValueCounts(b), config.alpha)
                               : mann_whitney(a, b, config.alpha);
  if (config.dichotomize_threshold) {
    c.threshold = *config.dichotomize_threshold;
  } else {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    c.threshold = median(pooled);
  }
  c.table = dichotomize(a, b, c.threshold);
  c.fisher_p = fisher_exact(c.table);
  c.effect = odds_ratio(c.table);
  c.a = summarize(a, data.size());
  c.b = summarize(b, data.size());
  return c;
}

std::string comparison_to_json(const Comparison& c) {
  json table = json::array();
  for (const auto& row : c.table.cells) table.push_back(json{row[0], row[1]});
  return json{{"mann_whitney", result_json(c.mann_whitney)},
              {"threshold", c.threshold},
              {"table", table},
              {"fisher_p", c.fisher_p},
              {"odds_ratio", c.effect.odds_ratio},
              {"odds_ratio_corrected", c.effect.correction_applied},
              {"a", summary_json(c.a)},
              {"b", summary_json(c.b)}}
             .dump(2) +
         "\n";
}

std::string report_to_json(const TrocSet& trocs, const Hierarchy& hierarchy, const Dataset& data,
                           const SynthesisConfig& config, const ContractReport& contract) {
  json table = json::array();
  for (const auto& t : trocs.trocs)
    table.push_back(json{{"pattern", t.pattern},
                         {"node_id", t.node},
                         {"n", t.summary.count},
                         {"share", t.summary.share},
                         {"mean", t.summary.mean},
                         {"median", t.summary.median},
                         {"min", t.summary.min},
                         {"q1", t.summary.q1},
                         {"q3", t.summary.q3},
                         {"max", t.summary.max}});
  json pairs = json::array();
  for (const auto& p : contract.pairs) {
    json j{{"a", hierarchy.node(p.a).text},
           {"b", hierarchy.node(p.b).text},
           {"relation", to_string(p.relation)},
           {"tested", p.tested}};
    if (p.tested) j.update(result_json(p.result));
    pairs.push_back(std::move(j));
  }
  json violations = json::array();
  for (const auto& v : contract.violations) violations.push_back(json{{"condition", v.condition}, {"detail", v.detail}});
  json settings{{"alpha", config.alpha},
                {"correction", config.correction == Correction::kBonferroni ? "bonferroni" : "none"}};
  settings["dichotomize_threshold"] =
      config.dichotomize_threshold ? json(*config.dichotomize_threshold) : json(nullptr);
  return json{{"rows", data.size()},
              {"alphabet", hierarchy.alphabet().symbols()},
              {"hierarchy_nodes", hierarchy.size()},
              {"settings", settings},
              {"trocs", table},
              {"adjacent_pairs", pairs},
              {"contract", json{{"ok", contract.ok()}, {"violations", violations}, {"notes", contract.notes}}},
              {"trace", json{{"file", "trace.jsonl"}, {"steps", trocs.trace.size()}}}}
             .dump(2) +
         "\n";
}

Hierarchy load_or_enumerate(const Alphabet& alphabet, const std::optional<std::filesystem::path>& path) {
  if (path) {
    auto h = Hierarchy::load(*path, alphabet);
    if (!(h.alphabet() == alphabet))
      throw Error("hierarchy alphabet '" + h.alphabet().symbols() + "' differs from dataset alphabet '" +
                  alphabet.symbols() + "'");
    return h;
  }
  if (alphabet.size() > Hierarchy::kMaxEnumeratedAlphabet)
    throw Error("alphabets above " + std::to_string(Hierarchy::kMaxEnumeratedAlphabet) +
                " symbols need a pre-built hierarchy (--hierarchy)");
  return Hierarchy::enumerate(alphabet);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };

  stage("config", [&] {
    config.synthesis.validate();
    return 0;
  });
  Dataset data = stage("ingest", [&] {
    auto d = ingest_dataset(config.input, config.encoding);
    if (d.empty()) throw Error(config.input.string() + ": no rows");
    return d;
  });
  Hierarchy hierarchy = stage("hierarchy", [&] { return load_or_enumerate(data.alphabet(), config.hierarchy); });
  std::optional<TestOracle> oracle;
  if (config.oracle) oracle = stage("oracle", [&] { return TestOracle::from_json(read_file(*config.oracle)); });
  const TestOracle* oracle_ptr = oracle ? &*oracle : nullptr;

  Classification cls = stage("classify", [&] { return classify_all(hierarchy, data); });
  TrocSet trocs = stage("synthesize", [&] { return synthesize(hierarchy, cls, data, config.synthesis, oracle_ptr); });
  ContractReport contract =
      stage("verify", [&] { return verify_output_contract(trocs, hierarchy, data, config.synthesis, oracle_ptr); });

  PipelineResult result{std::move(hierarchy), std::move(data), std::move(trocs), std::move(contract), {}, {}};
  stage("emit", [&] {
    result.boxplots = emit_boxplot_stats(result.trocs, result.data);
    result.report_json = report_to_json(result.trocs, result.hierarchy, result.data, config.synthesis, result.contract);
    if (config.out_dir.empty()) return 0;
    std::filesystem::create_directories(config.out_dir);
    write_file(config.out_dir / "report.json", result.report_json);
    write_file(config.out_dir / "trocs.csv", trocs_to_csv(result.trocs));
    write_file(config.out_dir / "trace.jsonl", trace_to_jsonl(result.trocs, result.hierarchy));
    write_file(config.out_dir / "boxplots.json", boxplots_to_json(result.boxplots));
    if (config.svg) write_file(config.out_dir / "boxplots.svg", boxplots_to_svg(result.boxplots));
    return 0;
  });
  return result;
}

}  // namespace gwm
