#include "qosbn/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace qosbn {

void DiscretizationSpec::validate() const {
  if (edges.empty() || (!open_top && edges.size() < 2))
    throw std::invalid_argument("discretization for '" + variable + "' needs at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("discretization edges for '" + variable +
                                  "' must be strictly increasing");
  if (!labels.empty() && labels.size() != bin_count())
    throw std::invalid_argument("discretization for '" + variable + "' has " +
                                std::to_string(labels.size()) + " labels for " +
                                std::to_string(bin_count()) + " bins");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> default_labels(const std::vector<double>& edges, bool open_top) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    out.push_back(fmt(edges[i]) + " to " + fmt(edges[i + 1]));
  if (open_top && !edges.empty()) out.push_back("greater than " + fmt(edges.back()));
  return out;
}

BinAssignment assign_state(const DiscretizationSpec& spec, double value, RangePolicy policy) {
  const std::size_t bins = spec.bin_count();
  std::size_t bin = 0;
  if (std::isnan(value)) throw OutOfRange("cannot discretize NaN");
  if (value < spec.edges.front()) {
    if (policy == RangePolicy::reject)
      throw OutOfRange("value " + fmt(value) + " below first edge " + fmt(spec.edges.front()));
    bin = 0;
  } else if (!spec.open_top && value > spec.edges.back()) {
    if (policy == RangePolicy::reject)
      throw OutOfRange("value " + fmt(value) + " above last edge " + fmt(spec.edges.back()));
    bin = bins - 1;
  } else {
    // Number of edges <= value, minus one, is the left-inclusive bin.
    auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), value);
    bin = static_cast<std::size_t>(it - spec.edges.begin()) - 1;
    bin = std::min(bin, bins - 1);
  }
  const auto& labels = spec.labels.empty() ? default_labels(spec.edges, spec.open_top) : spec.labels;
  return {bin + 1, labels[bin]};
}

std::vector<std::size_t> state_counts(const DiscretizationSpec& spec, std::span<const double> values,
                                      RangePolicy policy) {
  std::vector<std::size_t> counts(spec.bin_count(), 0);
  for (double v : values) {
    try {
      counts[assign_state(spec, v, policy).state_index - 1]++;
    } catch (const OutOfRange&) {
    }
  }
  return counts;
}

HierarchicalResult hierarchical_discretize(std::span<const double> values,
                                           std::size_t target_states,
                                           const std::string& variable) {
  if (values.empty()) throw std::invalid_argument("cannot discretize an empty sample");
  if (target_states == 0) throw std::invalid_argument("target_states must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  struct Bin {
    std::size_t lo, hi;  // [lo, hi) in sorted
  };
  auto variance = [&](const Bin& b) {
    const double n = static_cast<double>(b.hi - b.lo);
    double mean = 0.0;
    for (std::size_t i = b.lo; i < b.hi; ++i) mean += sorted[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = b.lo; i < b.hi; ++i) ss += (sorted[i] - mean) * (sorted[i] - mean);
    return ss / n;
  };
  auto split_point = [&](const Bin& b) -> std::optional<std::size_t> {
    if (sorted[b.lo] == sorted[b.hi - 1]) return std::nullopt;
    const std::size_t n = b.hi - b.lo;
    const double median = n % 2 ? sorted[b.lo + n / 2]
                                : 0.5 * (sorted[b.lo + n / 2 - 1] + sorted[b.lo + n / 2]);
    auto first = sorted.begin() + static_cast<std::ptrdiff_t>(b.lo);
    auto last = sorted.begin() + static_cast<std::ptrdiff_t>(b.hi);
    auto s = static_cast<std::size_t>(std::lower_bound(first, last, median) - sorted.begin());
    if (s == b.lo)
      s = static_cast<std::size_t>(std::upper_bound(first, last, sorted[b.lo]) - sorted.begin());
    return s;
  };

  std::vector<Bin> bins{{0, sorted.size()}};
  while (bins.size() < target_states) {
    std::optional<std::size_t> best;
    double best_var = -1.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (!split_point(bins[i])) continue;
      const double v = variance(bins[i]);
      if (v > best_var) {
        best_var = v;
        best = i;
      }
    }
    if (!best) break;
    const Bin b = bins[*best];
    const std::size_t s = *split_point(b);
    bins[*best] = {b.lo, s};
    bins.insert(bins.begin() + static_cast<std::ptrdiff_t>(*best) + 1, Bin{s, b.hi});
  }

  HierarchicalResult out;
  out.spec.variable = variable;
  for (const auto& b : bins) out.spec.edges.push_back(sorted[b.lo]);
  if (sorted.back() > out.spec.edges.back()) {
    out.spec.edges.push_back(sorted.back());
    out.spec.open_top = false;
  } else {
    out.spec.open_top = true;
  }
  out.spec.labels = default_labels(out.spec.edges, out.spec.open_top);
  if (bins.size() < target_states)
    out.notice = "only " + std::to_string(bins.size()) + " bins possible (requested " +
                 std::to_string(target_states) + "): too few distinct values";
  return out;
}

namespace {

DiscretizationSpec make_preset(std::vector<double> edges, bool open_top,
                               std::vector<std::string> labels, std::vector<int> printed,
                               std::vector<std::size_t> counts, std::string unit) {
  DiscretizationSpec s;
  s.edges = std::move(edges);
  s.open_top = open_top;
  s.labels = std::move(labels);
  s.printed_states = std::move(printed);
  s.reference_counts = std::move(counts);
  s.unit = std::move(unit);
  s.validate();
  return s;
}

std::vector<int> one_to(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return v;
}

const std::map<std::string, DiscretizationSpec>& presets() {
  static const std::map<std::string, DiscretizationSpec> table = [] {
    std::map<std::string, DiscretizationSpec> m;
    m["cpu"] = make_preset({0, 11, 20, 32, 39, 54, 61, 67, 82, 103}, true,
                           {"0 to 11", "11 to 20", "20 to 32", "32 to 39", "39 to 54", "54 to 61",
                            "61 to 67", "67 to 82", "82 to 103", "greater than 103"},
                           one_to(10), {480, 2400, 1092, 31, 916, 3, 50, 87, 885, 950}, "seconds");
    // Label 3 reads "213" but the shared edge is 233. Printed numbering skips 14.
    m["compile"] = make_preset(
        {0, 41, 233, 405, 701, 784, 918, 1046, 1194, 1424, 1529, 1620, 2028, 2512}, true,
        {"0 to 41", "41 to 233", "213 to 405", "405 to 701", "701 to 784", "784 to 918",
         "918 to 1046", "1046 to 1194", "1194 to 1424", "1424 to 1529", "1529 to 1620",
         "1620 to 2028", "2028 to 2512", "2654.5 and up"},
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 15},
        {124, 4910, 1230, 1007, 19, 7, 1, 1, 4, 1, 3, 9, 2, 1}, "seconds");
    m["memory"] = make_preset(
        {1, 1039, 1425, 1909, 2318, 2577, 3205, 3612, 3872, 4116, 4539, 5101, 5651}, true,
        {"1 to 1039", "1039 to 1425", "1425 to 1909", "1909 to 2318", "2318 to 2577",
         "2577 to 3205", "3205 to 3612", "3612 to 3872", "3872 to 4116", "4116 to 4539",
         "4539 to 5101", "5101 to 5651", "greater than 5651"},
        one_to(13), {135, 61, 549, 569, 1, 20, 35, 490, 127, 551, 84, 969, 990}, "MB/s");
    m["oltp"] = make_preset({0, 196, 561, 1130}, false, {"0 to 196", "196 to 561", "561 to 1130"},
                            one_to(3), {2152, 1327, 33}, "queries/sec");
    m["io"] = make_preset({0, 2, 17, 1009.6}, false, {"0 to 2", "2 to 17", "17 to 1009.6"},
                          one_to(3), {2461, 2457, 2459}, "Mb/s");
    return m;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"cpu", "compile", "memory", "oltp", "io"};
  return names;
}

const DiscretizationSpec& preset(const std::string& benchmark) {
  const auto& m = presets();
  auto it = m.find(benchmark);
  if (it == m.end()) throw std::out_of_range("no discretization preset for '" + benchmark + "'");
  return it->second;
}

nlohmann::json spec_to_json(const DiscretizationSpec& spec) {
  // Whole-number edges print without a trailing ".0".
  nlohmann::json edges = nlohmann::json::array();
  for (double e : spec.edges) {
    if (std::abs(e) < 9007199254740992.0 && e == std::floor(e))
      edges.push_back(static_cast<std::int64_t>(e));
    else
      edges.push_back(e);
  }
  nlohmann::json j{{"variable", spec.variable},
                   {"edges", edges},
                   {"open_top", spec.open_top},
                   {"labels", spec.labels.empty() ? default_labels(spec.edges, spec.open_top)
                                                  : spec.labels}};
  if (!spec.printed_states.empty()) j["printed_states"] = spec.printed_states;
  if (!spec.reference_counts.empty()) j["counts"] = spec.reference_counts;
  if (!spec.unit.empty()) j["unit"] = spec.unit;
  return j;
}

DiscretizationSpec spec_from_json(const nlohmann::json& j) {
  DiscretizationSpec s;
  s.variable = j.value("variable", std::string("qos_value"));
  s.edges = j.at("edges").get<std::vector<double>>();
  s.open_top = j.value("open_top", false);
  if (j.contains("labels")) s.labels = j.at("labels").get<std::vector<std::string>>();
  if (j.contains("printed_states")) s.printed_states = j.at("printed_states").get<std::vector<int>>();
  if (j.contains("counts")) s.reference_counts = j.at("counts").get<std::vector<std::size_t>>();
  s.unit = j.value("unit", std::string());
  s.validate();
  return s;
}

DiscretizationSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read discretization file " + path.string());
  return spec_from_json(nlohmann::json::parse(in));
}

}  // namespace qosbn
