#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qosbn/dataset.hpp"
#include "qosbn/discretization.hpp"

namespace qosbn {

/// One benchmark measurement as read from a trace.
struct RawRecord {
  std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
  std::string cloud;
  std::string region;
  std::string vm_size;
  std::optional<std::string> cpu_type;
  std::string benchmark;
  std::optional<double> qos_value;
  std::size_t line = 0;
};

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

enum class TimestampFormat { iso8601, unix_seconds, unix_millis };

/// Column mapping and normalization rules for a trace file.
struct IngestConfig {
  /// Logical field -> CSV header. Fields: timestamp, cloud, region, vm_size,
  /// cpu_type, benchmark, qos_value. Unmapped fields use their own name.
  std::map<std::string, std::string> columns;
  TimestampFormat timestamp_format = TimestampFormat::iso8601;
  /// Per field, raw text -> canonical text, applied after lowercasing.
  std::map<std::string, std::map<std::string, std::string>> aliases;
  std::set<std::string> missing_tokens{"", "na", "n/a", "null", "none", "nan", "-"};
  std::set<std::string> benchmarks{"cpu", "compile", "memory", "oltp", "io"};
  std::set<std::string> clouds{"aws", "gce"};
  std::set<std::string> regions{"us", "eu"};
  char delimiter = ',';
  std::size_t tod_bins = 4;

  std::string header_for(const std::string& field) const;
};

IngestConfig ingest_config_from_json(const nlohmann::json& j);
nlohmann::json ingest_config_to_json(const IngestConfig& cfg);
IngestConfig load_ingest_config(const std::filesystem::path& path);

/// RFC 4180 rows; each row carries the physical line on which it started.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
/// Throws DataError on an unterminated quoted field.
std::vector<CsvRow> read_csv(std::istream& in, char delimiter = ',');

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<Rejection> rejections;
  std::size_t data_rows = 0;
};

/// Throws DataError on an unreadable file or a header missing required columns.
ParseResult parse_csv(const std::filesystem::path& path, const IngestConfig& cfg);
ParseResult parse_csv(std::istream& in, const IngestConfig& cfg);

/// Parses "YYYY-MM-DD[T ]hh:mm[:ss[.fff]][Z|+hh:mm|-hh:mm]".
std::optional<std::int64_t> parse_iso8601(const std::string& text);

struct TimeFactors {
  std::size_t tod_index = 0;
  std::string tod_label;
  std::size_t dow_index = 0;  // 0 = mon
  std::string dow_label;
};

/// Throws std::invalid_argument unless tod_bins divides 24.
TimeFactors derive_time_factors(std::int64_t timestamp, std::size_t tod_bins);
std::vector<std::string> time_of_day_labels(std::size_t tod_bins);
const std::vector<std::string>& day_of_week_labels();

/// Variable ids of the ingested schema, in column order.
const std::vector<std::string>& factor_ids();

std::map<std::string, DiscretizationSpec> default_presets();

/// Discretizes each record with its benchmark's preset. Throws DataError when
/// a benchmark has no preset.
Dataset to_records(const std::vector<RawRecord>& raws,
                   const std::map<std::string, DiscretizationSpec>& presets,
                   std::size_t tod_bins = 4, RangePolicy policy = RangePolicy::clamp);

/// Rows of one benchmark with the benchmark column dropped and qos_value
/// restricted to the preset's labels.
Dataset slice_benchmark(const Dataset& ds, const std::string& benchmark,
                        const DiscretizationSpec& preset);

struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

/// Per benchmark in preset order, then "combined". Records without a value
/// are not counted.
std::vector<std::pair<std::string, SummaryStats>> summarize(const std::vector<RawRecord>& raws);
SummaryStats summarize_values(std::vector<double> values);
std::string format_summary(const std::vector<std::pair<std::string, SummaryStats>>& stats);

}  // namespace qosbn
