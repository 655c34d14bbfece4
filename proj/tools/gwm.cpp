// gwm: command-line front end of the library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwm/baselines.hpp"
#include "gwm/csv.hpp"
#include "gwm/encoding.hpp"
#include "gwm/hierarchy.hpp"
#include "gwm/report.hpp"
#include "gwm/repo_mining.hpp"
#include "gwm/synthesis.hpp"
#include "gwm/testgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kContractFailed = 1;
constexpr int kError = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gwm::Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gwm::Error("cannot write " + path.string());
  out << text;
}

// Writes to `path`, or stdout when it is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_file(path, text);
}

// Options shared by every command that reads a dataset.
struct DataOptions {
  std::string config;
  std::string alphabet;
  std::string input;
  std::string hierarchy;

  void add(CLI::App* app, bool needs_input = true) {
    app->add_option("--config", config, "encoding config (JSON)");
    app->add_option("--alphabet", alphabet, "symbols of a pre-encoded dataset, when no config is given");
    auto* in = app->add_option("--input", input, "dataset CSV (id,sequence,outcome)");
    if (needs_input) in->required();
    app->add_option("--hierarchy", hierarchy, "pre-built hierarchy (.json, or .csv)");
  }

  gwm::EncodingConfig encoding() const {
    if (!config.empty()) return gwm::EncodingConfig::from_file(config);
    if (alphabet.empty()) throw gwm::Error("give --config or --alphabet");
    gwm::EncodingConfig cfg;
    cfg.alphabet = gwm::Alphabet(alphabet);
    return cfg;
  }

  std::optional<fs::path> hierarchy_path() const {
    if (hierarchy.empty()) return std::nullopt;
    return fs::path(hierarchy);
  }
};

struct SynthesisOptions {
  std::optional<double> alpha;
  std::string correction;
  std::optional<double> threshold;
  std::string oracle;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "significance level (default 0.05)");
    app->add_option("--correction", correction, "bonferroni | none")->check(CLI::IsMember({"bonferroni", "none"}));
    app->add_option("--threshold", threshold, "outcome threshold for odds ratios (default: pooled median)");
    app->add_option("--oracle", oracle, "injected test verdicts (testing only)");
  }

  // Config file "synthesis" block first, then flags.
  gwm::SynthesisConfig build(const std::string& config_path) const {
    gwm::SynthesisConfig cfg;
    if (!config_path.empty()) {
      const auto j = json::parse(read_file(config_path), nullptr, false);
      if (j.is_object() && j.contains("synthesis")) {
        const auto& s = j["synthesis"];
        if (s.contains("alpha")) cfg.alpha = s["alpha"].get<double>();
        if (s.contains("correction")) cfg.correction = parse_correction(s["correction"].get<std::string>());
        if (s.contains("dichotomize_threshold") && !s["dichotomize_threshold"].is_null())
          cfg.dichotomize_threshold = s["dichotomize_threshold"].get<double>();
      }
    }
    if (alpha) cfg.alpha = *alpha;
    if (!correction.empty()) cfg.correction = parse_correction(correction);
    if (threshold) cfg.dichotomize_threshold = *threshold;
    cfg.validate();
    return cfg;
  }

  std::optional<fs::path> oracle_path() const {
    if (oracle.empty()) return std::nullopt;
    return fs::path(oracle);
  }

  static gwm::Correction parse_correction(const std::string& s) {
    if (s == "bonferroni") return gwm::Correction::kBonferroni;
    if (s == "none") return gwm::Correction::kNone;
    throw gwm::Error("correction must be bonferroni or none");
  }
};

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : gwm::csv::split(s, ',')) {
    auto t = gwm::csv::trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string hours_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += gwm::format_number(v[i]);
  }
  return out;
}

std::map<std::string, double> read_outcomes(const std::string& path) {
  std::map<std::string, double> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (gwm::csv::read_line(in, line, lineno == 0)) {
    if (++lineno == 1 || gwm::csv::trim(line).empty()) continue;
    const auto f = gwm::csv::split_line(line);
    if (f.size() != 2) throw gwm::ParseError("expected id,outcome", lineno);
    out[gwm::csv::trim(f[0])] = std::stod(f[1]);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine treatment-outcome constructs from encoded itemsets"};
  app.require_subcommand(1);

  // encode
  DataOptions enc_data;
  std::string enc_out;
  auto* encode = app.add_subcommand("encode", "encode raw rows into symbol sequences");
  enc_data.add(encode);
  encode->add_option("--out", enc_out, "output CSV (default stdout)");

  // hierarchy
  std::string hier_alphabet, hier_out, hier_format = "json";
  auto* hierarchy = app.add_subcommand("hierarchy", "enumerate the expression hierarchy of an alphabet");
  hierarchy->add_option("--alphabet", hier_alphabet, "symbols, e.g. SML")->required();
  hierarchy->add_option("--format", hier_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  hierarchy->add_option("--out", hier_out, "output file (default stdout)");

  // classify
  DataOptions cls_data;
  std::string cls_out;
  auto* classify = app.add_subcommand("classify", "assign every itemset its most specific expression");
  cls_data.add(classify);
  classify->add_option("--out", cls_out, "output CSV (default stdout)");

  // synthesize / run
  DataOptions syn_data, run_data;
  SynthesisOptions syn_opts, run_opts;
  std::string syn_out, run_out;
  bool run_svg = false;
  auto* synth = app.add_subcommand("synthesize", "merge the hierarchy into TrOCs (trocs.csv, trocs.json, trace.jsonl)");
  syn_data.add(synth);
  syn_opts.add(synth);
  synth->add_option("--out", syn_out, "output directory")->required();
  auto* run = app.add_subcommand("run", "full pipeline with report and plot data");
  run_data.add(run);
  run_opts.add(run);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_flag("--svg", run_svg, "also write boxplots.svg");

  // compare
  DataOptions cmp_data;
  SynthesisOptions cmp_opts;
  std::string cmp_a, cmp_b, cmp_out;
  auto* compare = app.add_subcommand("compare", "test two groups of itemsets against each other");
  cmp_data.add(compare);
  cmp_opts.add(compare);
  compare->add_option("--a", cmp_a, "comma-separated ids of the first group")->required();
  compare->add_option("--b", cmp_b, "comma-separated ids of the second group")->required();
  compare->add_option("--out", cmp_out, "output JSON (default stdout)");

  // gen
  std::string gen_alphabet, gen_strategy = "halves", gen_target, gen_expr, gen_out;
  std::uint64_t gen_seed = 0;
  gwm::GeneratorConfig gen_cfg;
  std::size_t gen_count = 20;
  auto* gen = app.add_subcommand("gen", "generate strings or planted-outcome scenarios");
  gen->add_option("--seed", gen_seed, "random seed")->required();
  gen->add_option("--alphabet", gen_alphabet, "alphabet of the scenario or expression");
  gen->add_option("--strategy", gen_strategy, "halves | thirds | quarters | regex")
      ->check(CLI::IsMember({"halves", "thirds", "quarters", "regex"}));
  gen->add_option("--target", gen_target, "planted expression for the regex strategy");
  gen->add_option("--per-node", gen_cfg.per_node, "strings per node");
  gen->add_option("--max-repeat", gen_cfg.max_repeat, "upper bound on each starred repetition");
  gen->add_option("--expr", gen_expr, "only print random members of this expression");
  gen->add_option("--count", gen_count, "strings printed with --expr");
  gen->add_option("--out", gen_out, "output directory (dataset.csv, expectations.json, config.json)");

  // apriori
  DataOptions ap_data;
  double ap_support = 0.7;
  std::size_t ap_len = 3;
  std::string ap_out;
  auto* apriori = app.add_subcommand("apriori", "frequent multisets of the encoded itemsets");
  ap_data.add(apriori);
  apriori->add_option("--min-support", ap_support, "minimum support in (0, 1]");
  apriori->add_option("--max-len", ap_len, "largest itemset size");
  apriori->add_option("--out", ap_out, "output CSV (default stdout)");

  // mine
  std::string mine_commits, mine_releases, mine_kind = "idle", mine_out, mine_outcomes, mine_keywords;
  auto* mine = app.add_subcommand("mine", "turn commit logs and releases into datasets");
  mine->require_subcommand(1);
  auto* mine_ei = mine->add_subcommand("edit-idle", "edit, idle or conflict hours per file");
  mine_ei->add_option("--commits", mine_commits, "commit log (JSON lines)")->required();
  mine_ei->add_option("--releases", mine_releases, "releases CSV; outcome = post-release bug commits")->required();
  mine_ei->add_option("--kind", mine_kind, "edit | idle | conflict")
      ->check(CLI::IsMember({"edit", "idle", "conflict"}));
  auto* mine_own = mine->add_subcommand("ownership", "per-release ownership symbols per file");
  mine_own->add_option("--commits", mine_commits, "commit log (JSON lines)")->required();
  mine_own->add_option("--releases", mine_releases, "releases CSV")->required();
  auto* mine_rc = mine->add_subcommand("release-cycles", "days between releases per project");
  mine_rc->add_option("--releases", mine_releases, "releases CSV with a project column")->required();
  mine_rc->add_option("--outcomes", mine_outcomes, "CSV of project,outcome (default 0)");
  for (auto* sub : {mine_ei, mine_own}) {
    sub->add_option("--keywords", mine_keywords, "comma-separated bug keywords");
  }
  for (auto* sub : {mine_ei, mine_own, mine_rc}) sub->add_option("--out", mine_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*encode) {
      const auto data = gwm::ingest_dataset(enc_data.input, enc_data.encoding());
      emit(enc_out, gwm::dataset_to_csv(data));
    } else if (*hierarchy) {
      const auto h = gwm::Hierarchy::enumerate(gwm::Alphabet(hier_alphabet));
      emit(hier_out, hier_format == "json" ? h.to_json() : h.to_csv());
      std::cerr << h.size() << " nodes\n";
    } else if (*classify) {
      gwm::Dataset data;
      try {
        data = gwm::ingest_dataset(cls_data.input, cls_data.encoding());
      } catch (const std::exception& e) {
        throw gwm::StageError("ingest", e.what());
      }
      const auto h = gwm::load_or_enumerate(data.alphabet(), cls_data.hierarchy_path());
      const auto cls = gwm::classify_all(h, data);
      std::string out = "id,sequence,outcome,node_id,pattern\n";
      for (std::size_t r = 0; r < data.size(); ++r) {
        const auto v = cls.node_of_row[r];
        out += gwm::csv::escape(data.itemset(r).id) + "," + data.itemset(r).sequence + "," +
               gwm::format_number(data.outcome(r)) + "," + std::to_string(v) + "," +
               gwm::csv::escape(h.node(v).text) + "\n";
      }
      emit(cls_out, out);
    } else if (synth->parsed() || run->parsed()) {
      const bool full = run->parsed();
      const auto& d = full ? run_data : syn_data;
      const auto& o = full ? run_opts : syn_opts;
      gwm::PipelineConfig cfg;
      try {
        cfg.encoding = d.encoding();
        cfg.synthesis = o.build(d.config);
      } catch (const std::exception& e) {
        throw gwm::StageError("config", e.what());
      }
      cfg.input = d.input;
      cfg.hierarchy = d.hierarchy_path();
      cfg.oracle = o.oracle_path();
      cfg.svg = run_svg;
      if (full) cfg.out_dir = run_out;
      auto result = gwm::run_pipeline(cfg);
      if (!full) {
        write_file(fs::path(syn_out) / "trocs.csv", gwm::trocs_to_csv(result.trocs));
        write_file(fs::path(syn_out) / "trocs.json", gwm::trocs_to_json(result.trocs));
        write_file(fs::path(syn_out) / "trace.jsonl", gwm::trace_to_jsonl(result.trocs, result.hierarchy));
      }
      for (const auto& t : result.trocs.trocs)
        std::printf("%-24s n=%-6zu share=%6.2f%% mean=%g median=%g\n", t.pattern.c_str(), t.summary.count,
                    t.summary.share, t.summary.mean, t.summary.median);
      for (const auto& v : result.contract.violations)
        std::fprintf(stderr, "contract violation (%d): %s\n", v.condition, v.detail.c_str());
      if (!result.contract.ok()) return kContractFailed;
    } else if (*compare) {
      const auto data = gwm::ingest_dataset(cmp_data.input, cmp_data.encoding());
      const auto a = split_ids(cmp_a), b = split_ids(cmp_b);
      const auto c = gwm::compare_treatments(a, b, data, cmp_opts.build(cmp_data.config));
      emit(cmp_out, gwm::comparison_to_json(c));
    } else if (*gen) {
      gen_cfg.seed = gen_seed;
      if (!gen_expr.empty()) {
        const auto expr = gwm::PatternExpr::parse(gen_expr);
        gwm::Rng rng(gen_seed);
        std::string out;
        for (std::size_t i = 0; i < gen_count; ++i) out += gwm::random_member(expr, rng, gen_cfg.max_repeat) + "\n";
        emit(gen_out.empty() ? "" : (fs::path(gen_out) / "strings.txt").string(), out);
      } else {
        if (gen_alphabet.empty()) throw gwm::Error("gen needs --alphabet (or --expr)");
        if (gen_out.empty()) throw gwm::Error("gen needs --out for scenarios");
        const gwm::Alphabet alphabet(gen_alphabet);
        const auto h = gwm::Hierarchy::enumerate(alphabet);
        gwm::Scenario sc;
        if (gen_strategy == "regex") {
          std::optional<gwm::NodeId> target;
          if (!gen_target.empty()) {
            target = h.find(gen_target);
            if (!target) throw gwm::Error("'" + gen_target + "' is not in the hierarchy");
          }
          sc = gwm::planted_regex_scenario(h, gen_cfg, target);
        } else {
          sc = gwm::planted_partition_scenario(h, gwm::parse_partition_strategy(gen_strategy), gen_cfg);
        }
        const fs::path dir(gen_out);
        write_file(dir / "dataset.csv", gwm::dataset_to_csv(sc.data));
        write_file(dir / "expectations.json", gwm::scenario_expectations_json(sc, h));
        write_file(dir / "config.json", json{{"alphabet", gen_alphabet}}.dump(2) + "\n");
        std::cerr << sc.data.size() << " rows, expecting " << sc.expected_trocs.size() << " TrOCs\n";
      }
    } else if (*apriori) {
      const auto data = gwm::ingest_dataset(ap_data.input, ap_data.encoding());
      std::vector<std::string> tx;
      for (const auto& it : data.itemsets()) tx.push_back(it.sequence);
      const auto sets = gwm::apriori_frequent_itemsets(tx, ap_support, ap_len);
      emit(ap_out, gwm::itemsets_to_csv(sets));
    } else if (*mine) {
      gwm::BugMatcher matcher = mine_keywords.empty() ? gwm::BugMatcher() : gwm::BugMatcher(split_ids(mine_keywords));
      std::string out = "id,sequence,outcome\n";
      if (*mine_rc) {
        const auto projects = gwm::read_releases_csv(mine_releases);
        const auto outcomes = mine_outcomes.empty() ? std::map<std::string, double>{} : read_outcomes(mine_outcomes);
        for (const auto& [project, rel] : projects) {
          const auto cycles = gwm::release_cycles(rel);
          if (cycles.empty()) continue;
          auto it = outcomes.find(project);
          out += gwm::csv::escape(project.empty() ? "project" : project) + "," + hours_list(cycles) + "," +
                 gwm::format_number(it == outcomes.end() ? 0.0 : it->second) + "\n";
        }
      } else {
        auto commits = gwm::read_commits_jsonl(mine_commits);
        std::stable_sort(commits.begin(), commits.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
        const auto projects = gwm::read_releases_csv(mine_releases);
        if (projects.size() != 1) throw gwm::Error("give the releases of one project");
        const auto& releases = projects.begin()->second;
        const auto bugs = gwm::post_release_bug_count(commits, releases, matcher);
        auto bug_total = [&](const std::string& file) {
          std::uint64_t n = 0;
          if (auto it = bugs.per_file.find(file); it != bugs.per_file.end())
            for (auto c : it->second) n += c;
          return static_cast<double>(n);
        };
        if (*mine_ei) {
          const auto kind = gwm::parse_interval_kind(mine_kind);
          for (const auto& seq : gwm::compute_edit_idle(commits)) {
            const auto hours = seq.hours(kind);
            if (hours.empty()) continue;
            out += gwm::csv::escape(seq.file) + "," + hours_list(hours) + "," + gwm::format_number(bug_total(seq.file)) +
                   "\n";
          }
        } else {
          for (const auto& h : gwm::ownership_from_commits(commits, releases))
            out += gwm::csv::escape(h.file) + "," + h.symbols + "," + gwm::format_number(bug_total(h.file)) + "\n";
        }
      }
      emit(mine_out, out);
    }
  } catch (const gwm::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return 0;
}
