#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mbc/types.hpp"

namespace mbc {

enum class DatasetFormat { CanonicalJsonl, CsvPair };

DatasetFormat dataset_format_from_string(const std::string& s);

struct ValidationIssue {
  int line = 0;  // 1-based line (or row) in the source file
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool clean() const { return issues.empty(); }
  void add(int line, std::string message);
  std::string to_text() const;
};

struct ParseResult {
  std::vector<Datapoint> data;
  ValidationReport report;
};

// Parses a dataset file. Records that fail validation are collected in
// the report with their line numbers; the rest are returned in file
// order. Throws std::runtime_error when the file cannot be read.
// For CsvPair, `path` names the segments CSV; see parse_csv_pair.
ParseResult parse_dataset(const std::string& path, DatasetFormat format);

// One datapoint per line. Numeric fields use shortest round-trip
// decimals so parse(serialize(x)) == x bit-exactly.
std::string serialize_datapoint(const Datapoint& dp);
void write_jsonl(const std::vector<Datapoint>& data, const std::string& path);
ParseResult parse_jsonl_stream(std::istream& in);

// The csv-pair adapter: a segments CSV (one row per datapoint, sample
// arrays as space-separated lists) joined with a fixes CSV on
// segment_id, and a per-day water-point CSV. See docs/formats.md.
ParseResult parse_csv_pair(const std::string& segments_csv,
                           const std::string& fixes_csv,
                           const std::string& water_csv);

// Keeps only datapoints with a non-empty accel segment and at least one
// GNSS fix (training/evaluation parity with annotated data).
std::vector<Datapoint> filter_complete(const std::vector<Datapoint>& data);

// Partition by animal id. Union of groups equals the input.
std::map<std::string, std::vector<Datapoint>> split_by_animal(
    const std::vector<Datapoint>& data);

// p_c = (count_c + smoothing) / (total + C*smoothing) over labeled
// datapoints. Throws std::invalid_argument when no labeled data.
Priors class_priors(const std::vector<Datapoint>& data, double smoothing);
Priors priors_from_counts(const std::vector<std::int64_t>& counts, double smoothing);

}  // namespace mbc
