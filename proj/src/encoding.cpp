#include "gwm/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gwm/csv.hpp"
#include "gwm/error.hpp"
#include "gwm/quantile.hpp"

namespace gwm {

void BinSpec::validate() const {
  if (labels.size() != thresholds.size() + 1)
    throw Error("bin spec needs exactly one more label than thresholds");
  for (double t : thresholds)
    if (!std::isfinite(t)) throw Error("bin threshold must be finite");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] < thresholds[i - 1]) throw Error("bin thresholds must be ascending");
  std::set<char> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw Error("bin labels must be distinct");
}

char BinSpec::label_for(double value) const {
  if (!std::isfinite(value)) throw Error("cannot encode a non-finite value");
  const auto it = boundary_rule == BoundaryRule::kLowerInclusive
                      ? std::upper_bound(thresholds.begin(), thresholds.end(), value)
                      : std::lower_bound(thresholds.begin(), thresholds.end(), value);
  return labels[static_cast<std::size_t>(it - thresholds.begin())];
}

void Dataset::add(EncodedItemset itemset, double outcome) {
  if (itemset.sequence.empty()) throw Error("itemset '" + itemset.id + "' has an empty sequence");
  if (!std::isfinite(outcome)) throw Error("itemset '" + itemset.id + "' has a non-finite outcome");
  if (alphabet_.size() > 0) alphabet_.require_over(itemset.sequence);
  if (by_id_.count(itemset.id)) throw Error("duplicate id '" + itemset.id + "'");
  by_id_.emplace(itemset.id, itemsets_.size());
  itemsets_.push_back(std::move(itemset));
  outcomes_.push_back(outcome);
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

EncodedItemset encode_categorical(std::string id, std::span<const std::string> raw, const EncodingMap& map) {
  EncodedItemset out{std::move(id), {}};
  out.sequence.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto it = map.find(raw[i]);
    if (it == map.end())
      throw Error("unknown label '" + raw[i] + "' at position " + std::to_string(i + 1));
    out.sequence.push_back(it->second);
  }
  return out;
}

BinSpec build_quantile_bins(std::span<const double> values, std::span<const double> cuts, std::string labels,
                            BoundaryRule rule) {
  if (values.empty()) throw Error("cannot build quantile bins from no values");
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (!(cuts[i] > 0.0 && cuts[i] < 1.0)) throw Error("quantile fractions must lie in (0,1)");
    if (i > 0 && !(cuts[i] > cuts[i - 1])) throw Error("quantile fractions must be ascending");
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw Error("cannot build quantile bins from a non-finite value");
  std::sort(sorted.begin(), sorted.end());
  BinSpec spec;
  spec.labels = std::move(labels);
  spec.boundary_rule = rule;
  for (double c : cuts) spec.thresholds.push_back(quantile_sorted(sorted, c));
  spec.validate();
  return spec;
}

EncodedItemset encode_numeric(std::string id, std::span<const double> raw, const BinSpec& bins) {
  EncodedItemset out{std::move(id), {}};
  out.sequence.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw Error("non-finite value at position " + std::to_string(i + 1));
    out.sequence.push_back(bins.label_for(raw[i]));
  }
  return out;
}

EncodedItemset encode_product(const EncodedItemset& a, const EncodedItemset& b, const ProductMap& map) {
  if (a.sequence.size() != b.sequence.size())
    throw Error("product encoding needs equal lengths (" + std::to_string(a.sequence.size()) + " vs " +
                std::to_string(b.sequence.size()) + ")");
  EncodedItemset out{a.id, {}};
  out.sequence.reserve(a.sequence.size());
  for (std::size_t i = 0; i < a.sequence.size(); ++i) {
    const auto it = map.find({a.sequence[i], b.sequence[i]});
    if (it == map.end())
      throw Error(std::string("no product symbol for pair (") + a.sequence[i] + "," + b.sequence[i] +
                  ") at position " + std::to_string(i + 1));
    out.sequence.push_back(it->second);
  }
  return out;
}

namespace {

BoundaryRule parse_rule(const std::string& s) {
  if (s == "lower_inclusive") return BoundaryRule::kLowerInclusive;
  if (s == "upper_inclusive") return BoundaryRule::kUpperInclusive;
  throw Error("unknown boundary_rule '" + s + "'");
}

char single_symbol(const std::string& s, const char* what) {
  if (s.size() != 1) throw Error(std::string(what) + " must be a single character, got '" + s + "'");
  return s[0];
}

double parse_double(const std::string& text) {
  const std::string t = csv::trim(text);
  double v = 0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != end) throw Error("'" + t + "' is not a number");
  return v;
}

}  // namespace

EncodingConfig EncodingConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  EncodingConfig cfg;
  try {
    cfg.alphabet = Alphabet(j.at("alphabet").get<std::string>());
    if (j.contains("bins")) {
      const auto& b = j["bins"];
      BinSpec spec;
      spec.thresholds = b.at("thresholds").get<std::vector<double>>();
      spec.labels = b.at("labels").get<std::string>();
      if (b.contains("boundary_rule")) spec.boundary_rule = parse_rule(b["boundary_rule"].get<std::string>());
      spec.validate();
      cfg.bins = std::move(spec);
    }
    if (j.contains("quantile_bins")) {
      const auto& q = j["quantile_bins"];
      cfg.quantile_cuts = q.at("cuts").get<std::vector<double>>();
      cfg.quantile_labels = q.at("labels").get<std::string>();
      if (q.contains("boundary_rule")) cfg.quantile_rule = parse_rule(q["boundary_rule"].get<std::string>());
      if (cfg.quantile_labels.size() != cfg.quantile_cuts->size() + 1)
        throw Error("quantile_bins needs exactly one more label than cuts");
    }
    if (j.contains("categorical")) {
      EncodingMap map;
      for (const auto& [raw, sym] : j["categorical"].items())
        map.emplace(raw, single_symbol(sym.get<std::string>(), "categorical symbol"));
      cfg.categorical = std::move(map);
    }
    if (j.contains("product")) {
      ProductMap map;
      for (const auto& [pair, sym] : j["product"].items()) {
        if (pair.size() != 2) throw Error("product key '" + pair + "' must be two symbols");
        map.emplace(std::make_pair(pair[0], pair[1]), single_symbol(sym.get<std::string>(), "product symbol"));
      }
      cfg.product = std::move(map);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  const int modes = cfg.bins.has_value() + cfg.quantile_cuts.has_value() + cfg.categorical.has_value() +
                    cfg.product.has_value();
  if (modes > 1) throw Error("config may declare at most one of bins, quantile_bins, categorical, product");
  auto check_image = [&](char c) {
    if (!cfg.alphabet.contains(c)) throw Error(std::string("encoded symbol '") + c + "' is not in the alphabet");
  };
  if (cfg.bins)
    for (char c : cfg.bins->labels) check_image(c);
  for (char c : cfg.quantile_labels) check_image(c);
  if (cfg.categorical)
    for (const auto& [raw, c] : *cfg.categorical) check_image(c);
  if (cfg.product)
    for (const auto& [raw, c] : *cfg.product) check_image(c);
  return cfg;
}

EncodingConfig EncodingConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

namespace {

struct RawRow {
  std::size_t line;
  std::string id;
  std::string sequence;
  std::string sequence_b;
  double outcome;
};

std::vector<double> parse_numeric_list(const std::string& field) {
  std::vector<double> out;
  for (const auto& part : csv::split(field, ';')) {
    if (csv::trim(part).empty()) continue;
    out.push_back(parse_double(part));
  }
  return out;
}

}  // namespace

Dataset ingest_dataset_text(const std::string& text, const EncodingConfig& config) {
  std::istringstream in(text);
  std::string line;
  if (!csv::read_line(in, line, true)) throw ParseError("missing header row", 1);
  std::vector<std::string> header;
  try {
    header = csv::split_line(line);
  } catch (const Error& e) {
    throw ParseError(e.what(), 1);
  }
  for (auto& h : header) h = csv::trim(h);
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw ParseError("header lacks column '" + name + "'", 1);
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = *column("id", true);
  const std::size_t seq_col = *column("sequence", true);
  const std::size_t out_col = *column("outcome", true);
  const auto seqb_col = column("sequence_b", config.product.has_value());

  std::vector<RawRow> rows;
  std::size_t lineno = 1;
  while (csv::read_line(in, line, false)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = csv::split_line(line);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    RawRow row{lineno, csv::trim(fields[id_col]), csv::trim(fields[seq_col]), {}, 0.0};
    if (seqb_col) row.sequence_b = csv::trim(fields[*seqb_col]);
    if (row.id.empty()) throw ParseError("empty id", lineno);
    if (csv::trim(fields[out_col]).empty()) throw ParseError("missing outcome for '" + row.id + "'", lineno);
    try {
      row.outcome = parse_double(fields[out_col]);
    } catch (const Error& e) {
      throw ParseError(std::string("outcome: ") + e.what(), lineno);
    }
    if (row.sequence.empty()) throw ParseError("empty sequence for '" + row.id + "'", lineno);
    rows.push_back(std::move(row));
  }

  std::optional<BinSpec> bins = config.bins;
  if (config.quantile_cuts) {
    std::vector<double> all;
    for (const auto& r : rows) {
      try {
        const auto vals = parse_numeric_list(r.sequence);
        all.insert(all.end(), vals.begin(), vals.end());
      } catch (const Error& e) {
        throw ParseError(e.what(), r.line);
      }
    }
    bins = build_quantile_bins(all, *config.quantile_cuts, config.quantile_labels, config.quantile_rule);
  }

  Dataset data(config.alphabet);
  for (const auto& r : rows) {
    try {
      EncodedItemset item;
      if (bins) {
        item = encode_numeric(r.id, parse_numeric_list(r.sequence), *bins);
      } else if (config.categorical) {
        std::vector<std::string> labels;
        for (const auto& part : csv::split(r.sequence, ';')) labels.push_back(csv::trim(part));
        item = encode_categorical(r.id, labels, *config.categorical);
      } else if (config.product) {
        item = encode_product({r.id, r.sequence}, {r.id, r.sequence_b}, *config.product);
      } else {
        item = {r.id, r.sequence};
      }
      data.add(std::move(item), r.outcome);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), r.line);
    }
  }
  return data;
}

Dataset ingest_dataset(const std::filesystem::path& path, const EncodingConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ingest_dataset_text(ss.str(), config);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "id,sequence,outcome\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += csv::escape(data.itemset(i).id);
    out += ',';
    out += csv::escape(data.itemset(i).sequence);
    out += ',';
    out += format_number(data.outcome(i));
    out += '\n';
  }
  return out;
}

}  // namespace gwm
