#include "qosbn/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qosbn {

using nlohmann::json;

namespace {

const std::vector<std::string> kFields{"timestamp", "cloud",     "region",   "vm_size",
                                       "cpu_type",  "benchmark", "qos_value"};
const std::vector<std::string> kRequired{"timestamp", "cloud", "region", "vm_size", "benchmark"};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool read_int(const std::string& s, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    const char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string two_digits(std::size_t v) {
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << v;
  return os.str();
}

TimestampFormat format_from_string(const std::string& s) {
  if (s == "iso8601") return TimestampFormat::iso8601;
  if (s == "unix") return TimestampFormat::unix_seconds;
  if (s == "unix_ms") return TimestampFormat::unix_millis;
  throw DataError("unknown timestamp_format '" + s + "' (expected iso8601, unix or unix_ms)");
}

std::string format_to_string(TimestampFormat f) {
  switch (f) {
    case TimestampFormat::unix_seconds: return "unix";
    case TimestampFormat::unix_millis: return "unix_ms";
    default: return "iso8601";
  }
}

}  // namespace

std::string IngestConfig::header_for(const std::string& field) const {
  auto it = columns.find(field);
  return it == columns.end() ? field : it->second;
}

IngestConfig ingest_config_from_json(const json& j) {
  IngestConfig cfg;
  try {
    if (j.contains("columns"))
      for (auto it = j["columns"].begin(); it != j["columns"].end(); ++it) {
        if (std::find(kFields.begin(), kFields.end(), it.key()) == kFields.end())
          throw DataError("unknown field '" + it.key() + "' in column mapping");
        cfg.columns[it.key()] = it.value().get<std::string>();
      }
    if (j.contains("timestamp_format"))
      cfg.timestamp_format = format_from_string(j["timestamp_format"].get<std::string>());
    if (j.contains("aliases"))
      for (auto it = j["aliases"].begin(); it != j["aliases"].end(); ++it)
        for (auto a = it.value().begin(); a != it.value().end(); ++a)
          cfg.aliases[it.key()][lower(a.key())] = a.value().get<std::string>();
    if (j.contains("missing_tokens")) {
      cfg.missing_tokens.clear();
      for (const auto& t : j["missing_tokens"]) cfg.missing_tokens.insert(lower(t.get<std::string>()));
    }
    if (j.contains("benchmarks")) cfg.benchmarks = j["benchmarks"].get<std::set<std::string>>();
    if (j.contains("clouds")) cfg.clouds = j["clouds"].get<std::set<std::string>>();
    if (j.contains("regions")) cfg.regions = j["regions"].get<std::set<std::string>>();
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      if (d.size() != 1) throw DataError("delimiter must be a single character");
      cfg.delimiter = d[0];
    }
    if (j.contains("tod_bins")) cfg.tod_bins = j["tod_bins"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ingest config: ") + e.what());
  }
  return cfg;
}

json ingest_config_to_json(const IngestConfig& cfg) {
  json j{{"columns", cfg.columns},
         {"timestamp_format", format_to_string(cfg.timestamp_format)},
         {"aliases", cfg.aliases},
         {"missing_tokens", cfg.missing_tokens},
         {"benchmarks", cfg.benchmarks},
         {"clouds", cfg.clouds},
         {"regions", cfg.regions},
         {"delimiter", std::string(1, cfg.delimiter)},
         {"tod_bins", cfg.tod_bins}};
  return j;
}

IngestConfig load_ingest_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ingest config " + path.string());
  try {
    return ingest_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<CsvRow> read_csv(std::istream& in, char delimiter) {
  std::vector<CsvRow> rows;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t i = 0;
  if (content.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;
  std::size_t line = 1;
  CsvRow row{line, {}};
  std::string field;
  bool quoted = false, in_quotes = false, row_has_data = false;
  std::size_t quote_line = 0;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (row_has_data) rows.push_back(std::move(row));
    row = CsvRow{line, {}};
    row_has_data = false;
  };

  for (; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !quoted) {
      in_quotes = quoted = row_has_data = true;
      quote_line = line;
    } else if (c == delimiter) {
      row_has_data = true;
      end_field();
    } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      if (c != '\r') row_has_data = true;
      if (c != '\r') field += c;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field starting on line " + std::to_string(quote_line));
  if (row_has_data || !field.empty()) end_row();
  return rows;
}

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
  const std::string s = trim(text);
  std::size_t p = 0;
  int y, mo, d, h = 0, mi = 0, sec = 0;
  if (!read_int(s, p, 4, y) || p >= s.size() || s[p++] != '-') return std::nullopt;
  if (!read_int(s, p, 2, mo) || p >= s.size() || s[p++] != '-') return std::nullopt;
  if (!read_int(s, p, 2, d)) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1) return std::nullopt;
  static const int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (d > kDays[mo - 1] || (mo == 2 && d == 29 && !leap)) return std::nullopt;
  std::int64_t offset = 0;
  if (p < s.size()) {
    if (s[p] != 'T' && s[p] != 't' && s[p] != ' ') return std::nullopt;
    ++p;
    if (!read_int(s, p, 2, h) || p >= s.size() || s[p++] != ':') return std::nullopt;
    if (!read_int(s, p, 2, mi)) return std::nullopt;
    if (p < s.size() && s[p] == ':') {
      ++p;
      if (!read_int(s, p, 2, sec)) return std::nullopt;
      if (p < s.size() && (s[p] == '.' || s[p] == ',')) {
        ++p;
        const std::size_t start = p;
        while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) ++p;
        if (p == start) return std::nullopt;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
    if (p < s.size()) {
      if (s[p] == 'Z' || s[p] == 'z') {
        ++p;
      } else if (s[p] == '+' || s[p] == '-') {
        const int sign = s[p++] == '-' ? -1 : 1;
        int oh, om = 0;
        if (!read_int(s, p, 2, oh)) return std::nullopt;
        if (p < s.size() && s[p] == ':') ++p;
        if (p < s.size() && !read_int(s, p, 2, om)) return std::nullopt;
        offset = sign * (oh * 3600 + om * 60);
      } else {
        return std::nullopt;
      }
    }
    if (p != s.size()) return std::nullopt;
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + sec - offset;
}

const std::vector<std::string>& day_of_week_labels() {
  static const std::vector<std::string> labels{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
  return labels;
}

std::vector<std::string> time_of_day_labels(std::size_t tod_bins) {
  if (tod_bins == 0 || 24 % tod_bins != 0)
    throw std::invalid_argument("tod_bins must divide 24, got " + std::to_string(tod_bins));
  const std::size_t width = 24 / tod_bins;
  std::vector<std::string> out;
  for (std::size_t b = 0; b < tod_bins; ++b)
    out.push_back(two_digits(b * width) + "-" + two_digits((b + 1) * width));
  return out;
}

TimeFactors derive_time_factors(std::int64_t timestamp, std::size_t tod_bins) {
  const auto labels = time_of_day_labels(tod_bins);
  std::int64_t days = timestamp / 86400;
  std::int64_t secs = timestamp % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  TimeFactors t;
  const auto hour = static_cast<std::size_t>(secs / 3600);
  t.tod_index = hour / (24 / tod_bins);
  t.tod_label = labels[t.tod_index];
  // 1970-01-01 was a Thursday.
  t.dow_index = static_cast<std::size_t>(((days % 7) + 7 + 3) % 7);
  t.dow_label = day_of_week_labels()[t.dow_index];
  return t;
}

ParseResult parse_csv(std::istream& in, const IngestConfig& cfg) {
  auto rows = read_csv(in, cfg.delimiter);
  if (rows.empty()) throw DataError("CSV input has no header row");
  const auto& header = rows.front().fields;
  std::map<std::string, std::size_t> col;
  for (const auto& f : kFields) {
    const auto name = cfg.header_for(f);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) {
        col[f] = i;
        break;
      }
  }
  std::vector<std::string> absent;
  for (const auto& f : kRequired)
    if (!col.count(f)) absent.push_back(cfg.header_for(f));
  if (!col.count("qos_value")) absent.push_back(cfg.header_for("qos_value"));
  if (!absent.empty()) {
    std::string msg = "CSV header is missing required columns:";
    for (const auto& a : absent) msg += " " + a;
    throw DataError(msg);
  }

  ParseResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++result.data_rows;
    auto reject = [&](std::string reason) { result.rejections.push_back({row.line, std::move(reason)}); };
    if (row.fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(row.fields.size()));
      continue;
    }
    auto cell = [&](const std::string& f) -> std::optional<std::string> {
      auto it = col.find(f);
      if (it == col.end()) return std::nullopt;
      std::string v = trim(row.fields[it->second]);
      if (cfg.missing_tokens.count(lower(v))) return std::nullopt;
      if (f != "cpu_type" && f != "timestamp" && f != "qos_value") v = lower(v);
      auto a = cfg.aliases.find(f);
      if (a != cfg.aliases.end()) {
        auto m = a->second.find(lower(v));
        if (m != a->second.end()) v = m->second;
      }
      return v;
    };

    RawRecord rec;
    rec.line = row.line;
    std::string missing;
    for (const auto& f : kRequired)
      if (!cell(f)) {
        missing = f;
        break;
      }
    if (!missing.empty()) {
      reject("missing " + missing);
      continue;
    }
    const auto ts = *cell("timestamp");
    std::optional<std::int64_t> parsed;
    if (cfg.timestamp_format == TimestampFormat::iso8601) {
      parsed = parse_iso8601(ts);
    } else if (auto n = parse_number(ts)) {
      const double secs = cfg.timestamp_format == TimestampFormat::unix_millis ? *n / 1000.0 : *n;
      parsed = static_cast<std::int64_t>(std::floor(secs));
    }
    if (!parsed) {
      reject("invalid timestamp '" + ts + "'");
      continue;
    }
    rec.timestamp = *parsed;
    rec.cloud = *cell("cloud");
    rec.region = *cell("region");
    rec.vm_size = *cell("vm_size");
    rec.benchmark = *cell("benchmark");
    rec.cpu_type = cell("cpu_type");
    if (!cfg.benchmarks.count(rec.benchmark)) {
      reject("unknown benchmark '" + rec.benchmark + "'");
      continue;
    }
    if (!cfg.clouds.count(rec.cloud)) {
      reject("unknown cloud '" + rec.cloud + "'");
      continue;
    }
    if (!cfg.regions.count(rec.region)) {
      reject("unknown region '" + rec.region + "'");
      continue;
    }
    if (auto q = cell("qos_value")) {
      auto v = parse_number(*q);
      if (!v) {
        reject("invalid qos_value '" + *q + "'");
        continue;
      }
      rec.qos_value = *v;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ParseResult parse_csv(const std::filesystem::path& path, const IngestConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read CSV file " + path.string());
  return parse_csv(in, cfg);
}

const std::vector<std::string>& factor_ids() {
  static const std::vector<std::string> ids{"cloud",       "region",      "vm_size",
                                            "cpu_type",    "benchmark",   "time_of_day",
                                            "day_of_week", "qos_value"};
  return ids;
}

std::map<std::string, DiscretizationSpec> default_presets() {
  std::map<std::string, DiscretizationSpec> m;
  for (const auto& n : preset_names()) m[n] = preset(n);
  return m;
}

namespace {

std::vector<std::string> benchmark_order(const std::set<std::string>& present) {
  std::vector<std::string> out;
  for (const auto& n : preset_names())
    if (present.count(n)) out.push_back(n);
  for (const auto& n : present)
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  return out;
}

}  // namespace

Dataset to_records(const std::vector<RawRecord>& raws,
                   const std::map<std::string, DiscretizationSpec>& presets,
                   std::size_t tod_bins, RangePolicy policy) {
  std::set<std::string> clouds, regions, sizes, cpus, benchmarks;
  for (const auto& r : raws) {
    clouds.insert(r.cloud);
    regions.insert(r.region);
    sizes.insert(r.vm_size);
    if (r.cpu_type) cpus.insert(*r.cpu_type);
    benchmarks.insert(r.benchmark);
  }
  const auto order = benchmark_order(benchmarks);
  std::vector<std::string> qos_states;
  std::map<std::string, std::string> label_owner;
  for (const auto& b : order) {
    auto it = presets.find(b);
    if (it == presets.end()) throw DataError("no discretization preset for benchmark '" + b + "'");
    const auto labels = it->second.labels.empty()
                            ? default_labels(it->second.edges, it->second.open_top)
                            : it->second.labels;
    for (const auto& l : labels) {
      auto [o, fresh] = label_owner.emplace(l, b);
      if (!fresh)
        throw DataError("presets for '" + o->second + "' and '" + b + "' share the state label '" +
                        l + "'");
      qos_states.push_back(l);
    }
  }

  auto var = [](const std::string& id, std::vector<std::string> states) {
    return Variable{id, id, std::move(states)};
  };
  Dataset ds;
  ds.variables = {var("cloud", {clouds.begin(), clouds.end()}),
                  var("region", {regions.begin(), regions.end()}),
                  var("vm_size", {sizes.begin(), sizes.end()}),
                  var("cpu_type", {cpus.begin(), cpus.end()}),
                  var("benchmark", order),
                  var("time_of_day", time_of_day_labels(tod_bins)),
                  var("day_of_week", day_of_week_labels()),
                  var("qos_value", qos_states)};
  const bool has_cpu = !cpus.empty();

  std::vector<Record> records;
  records.reserve(raws.size());
  for (const auto& r : raws) {
    Record rec{{"cloud", r.cloud}, {"region", r.region}, {"vm_size", r.vm_size},
               {"benchmark", r.benchmark}};
    if (r.cpu_type) rec["cpu_type"] = *r.cpu_type;
    const auto t = derive_time_factors(r.timestamp, tod_bins);
    rec["time_of_day"] = t.tod_label;
    rec["day_of_week"] = t.dow_label;
    if (r.qos_value) {
      try {
        rec["qos_value"] = assign_state(presets.at(r.benchmark), *r.qos_value, policy).state_label;
      } catch (const OutOfRange&) {
      }
    }
    records.push_back(std::move(rec));
  }
  if (!has_cpu) ds.variables.erase(ds.variables.begin() + 3);
  for (const auto& rec : records) ds.add(rec);
  return ds;
}

Dataset slice_benchmark(const Dataset& ds, const std::string& benchmark,
                        const DiscretizationSpec& preset) {
  auto out = drop_variable(filter_equal(ds, "benchmark", benchmark), "benchmark");
  const auto labels = preset.labels.empty() ? default_labels(preset.edges, preset.open_top)
                                            : preset.labels;
  return restrict_states(out, "qos_value", labels);
}

SummaryStats summarize_values(std::vector<double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  // Rounding can push the mean a hair outside [min, max] for constant input.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

std::vector<std::pair<std::string, SummaryStats>> summarize(const std::vector<RawRecord>& raws) {
  std::map<std::string, std::vector<double>> by;
  std::vector<double> all;
  for (const auto& r : raws) {
    by[r.benchmark];
    if (!r.qos_value) continue;
    by[r.benchmark].push_back(*r.qos_value);
    all.push_back(*r.qos_value);
  }
  std::set<std::string> present;
  for (const auto& [b, _] : by) present.insert(b);
  std::vector<std::pair<std::string, SummaryStats>> out;
  for (const auto& b : benchmark_order(present)) out.emplace_back(b, summarize_values(by[b]));
  out.emplace_back("combined", summarize_values(std::move(all)));
  return out;
}

std::string format_summary(const std::vector<std::pair<std::string, SummaryStats>>& stats) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "benchmark" << std::right << std::setw(12) << "min"
     << std::setw(12) << "max" << std::setw(12) << "mean" << std::setw(12) << "std"
     << std::setw(8) << "count" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& [name, s] : stats)
    os << std::left << std::setw(10) << name << std::right << std::setw(12) << s.min
       << std::setw(12) << s.max << std::setw(12) << s.mean << std::setw(12) << s.std
       << std::setw(8) << s.count << '\n';
  return os.str();
}

}  // namespace qosbn
