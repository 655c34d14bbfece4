#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwm/encoding.hpp"
#include "gwm/error.hpp"
#include "gwm/hierarchy.hpp"
#include "gwm/stats.hpp"
#include "gwm/synthesis.hpp"

namespace gwm {

struct BoxplotStats {
  std::string pattern;
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;  // most extreme values inside the 1.5 IQR fences
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

/// Type 7 quartiles; values beyond 1.5 IQR from the box are outliers.
BoxplotStats boxplot_stats(std::span<const double> outcomes, std::string pattern = {});

/// One block per TrOC with members, in TrOC order.
std::vector<BoxplotStats> emit_boxplot_stats(const TrocSet& trocs, const Dataset& data);
std::string boxplots_to_json(std::span<const BoxplotStats> boxes);
std::string boxplots_to_svg(std::span<const BoxplotStats> boxes);

struct Comparison {
  TestResult mann_whitney;
  double threshold = 0.0;  // outcomes above it count as high
  ContingencyTable table;  // rows a, b
  double fisher_p = 1.0;
  EffectSize effect;
  OutcomeSummary a;
  OutcomeSummary b;
};

/// Inspection only: Mann-Whitney, then Fisher and odds ratio on the outcome
/// split at the configured threshold (pooled median when unset).
Comparison compare_treatments(std::span<const std::string> a_ids, std::span<const std::string> b_ids,
                              const Dataset& data, const SynthesisConfig& config);
std::string comparison_to_json(const Comparison& c);

std::string report_to_json(const TrocSet& trocs, const Hierarchy& hierarchy, const Dataset& data,
                           const SynthesisConfig& config, const ContractReport& contract);

/// Failure of one pipeline stage (ingest, hierarchy, classify, synthesize, verify, emit).
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

struct PipelineConfig {
  EncodingConfig encoding;
  std::filesystem::path input;
  std::filesystem::path out_dir;  // nothing is written when empty
  std::optional<std::filesystem::path> hierarchy;
  std::optional<std::filesystem::path> oracle;
  SynthesisConfig synthesis;
  bool svg = false;
};

struct PipelineResult {
  Hierarchy hierarchy;
  Dataset data;
  TrocSet trocs;
  ContractReport contract;
  std::vector<BoxplotStats> boxplots;
  std::string report_json;
};

/// ingest, hierarchy, classify, synthesize, verify, emit. Writes report.json,
/// trocs.csv, trace.jsonl and boxplots.json (and boxplots.svg) to out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

/// The hierarchy a dataset needs: loaded from `path`, else enumerated.
Hierarchy load_or_enumerate(const Alphabet& alphabet, const std::optional<std::filesystem::path>& path);

}  // namespace gwm
