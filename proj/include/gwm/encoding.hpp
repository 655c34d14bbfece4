#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gwm/alphabet.hpp"

namespace gwm {

/// Which bin a value lying exactly on a threshold belongs to.
enum class BoundaryRule {
  kLowerInclusive,  ///< bins are [lo, hi): the value goes to the upper bin
  kUpperInclusive,  ///< bins are (lo, hi]: the value goes to the lower bin
};

/// Discretization of a numeric measure into labelled bins.
struct BinSpec {
  std::vector<double> thresholds;  // non-decreasing cut points
  std::string labels;              // thresholds.size() + 1 symbols
  BoundaryRule boundary_rule = BoundaryRule::kLowerInclusive;

  /// Throws gwm::Error if the spec is inconsistent.
  void validate() const;
  /// Label of the unique bin containing `value` (which must be finite).
  char label_for(double value) const;
};

using EncodingMap = std::map<std::string, char>;
using ProductMap = std::map<std::pair<char, char>, char>;

struct EncodedItemset {
  std::string id;
  std::string sequence;
};

struct OutcomeRecord {
  std::string id;
  double value = 0.0;
};

/// Itemsets paired one-to-one with numeric outcomes. Row order is preserved.
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}

  /// Rejects duplicate ids, empty or foreign sequences and non-finite outcomes.
  void add(EncodedItemset itemset, double outcome);

  std::size_t size() const noexcept { return itemsets_.size(); }
  bool empty() const noexcept { return itemsets_.empty(); }
  const Alphabet& alphabet() const noexcept { return alphabet_; }

  const std::vector<EncodedItemset>& itemsets() const noexcept { return itemsets_; }
  std::span<const double> outcomes() const noexcept { return outcomes_; }
  const EncodedItemset& itemset(std::size_t row) const { return itemsets_.at(row); }
  double outcome(std::size_t row) const { return outcomes_.at(row); }
  OutcomeRecord outcome_record(std::size_t row) const { return {itemsets_.at(row).id, outcomes_.at(row)}; }

  std::optional<std::size_t> find(const std::string& id) const;

private:
  Alphabet alphabet_;
  std::vector<EncodedItemset> itemsets_;
  std::vector<double> outcomes_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Maps raw categorical labels positionwise. Throws naming the 1-based
/// position of the first unmapped label.
EncodedItemset encode_categorical(std::string id, std::span<const std::string> raw, const EncodingMap& map);

/// Quantile cut points (type 7) of `values` at the given fractions.
BinSpec build_quantile_bins(std::span<const double> values, std::span<const double> cuts, std::string labels,
                            BoundaryRule rule = BoundaryRule::kLowerInclusive);

EncodedItemset encode_numeric(std::string id, std::span<const double> raw, const BinSpec& bins);

/// Positionwise pair encoding of two equally long symbol sequences.
EncodedItemset encode_product(const EncodedItemset& a, const EncodedItemset& b, const ProductMap& map);

/// Everything a config file can say about turning raw rows into a Dataset.
struct EncodingConfig {
  Alphabet alphabet;
  std::optional<BinSpec> bins;
  // Bins computed on ingest from all raw values in the file.
  std::optional<std::vector<double>> quantile_cuts;
  std::string quantile_labels;
  BoundaryRule quantile_rule = BoundaryRule::kLowerInclusive;
  std::optional<EncodingMap> categorical;
  std::optional<ProductMap> product;

  /// Parses the JSON config described in the README.
  static EncodingConfig from_json_text(const std::string& text);
  static EncodingConfig from_file(const std::filesystem::path& path);
};

/// Reads `id,sequence,outcome` CSV (plus `sequence_b` when a product map is
/// configured). Errors carry the offending line number.
Dataset ingest_dataset(const std::filesystem::path& path, const EncodingConfig& config);
Dataset ingest_dataset_text(const std::string& text, const EncodingConfig& config);

/// Writes the pre-encoded `id,sequence,outcome` form of a dataset.
std::string dataset_to_csv(const Dataset& data);

std::string format_number(double v);

}  // namespace gwm
