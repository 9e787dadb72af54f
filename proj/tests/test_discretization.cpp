#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "qosbn/discretization.hpp"

using namespace qosbn;

namespace {
const std::filesystem::path kPresetDir = std::filesystem::path(QOSBN_DATA_DIR) / "presets";

std::vector<double> random_values(const DiscretizationSpec& spec, std::size_t n,
                                  std::mt19937_64& rng) {
  const double lo = spec.edges.front() - 10.0;
  const double hi = spec.edges.back() * 1.5 + 10.0;
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}
}  // namespace

TEST_CASE("cpu preset examples") {
  const auto& cpu = preset("cpu");
  auto a = assign_state(cpu, 15);
  CHECK(a.state_index == 2);
  CHECK(a.state_label == "11 to 20");
  a = assign_state(cpu, 150);
  CHECK(a.state_index == 10);
  CHECK(a.state_label == "greater than 103");
}

TEST_CASE("boundary values go right") {
  CHECK(assign_state(preset("oltp"), 196).state_index == 2);
  CHECK(assign_state(preset("cpu"), 0).state_index == 1);
  CHECK(assign_state(preset("cpu"), 11).state_index == 2);
}

TEST_CASE("closed top includes the last edge and clamps above it") {
  const auto& io = preset("io");
  CHECK(assign_state(io, 1009.6).state_index == 3);
  CHECK(assign_state(io, 5000).state_index == 3);
  CHECK_THROWS_AS(assign_state(io, 5000, RangePolicy::reject), OutOfRange);
}

TEST_CASE("below first edge clamps or rejects") {
  const auto& mem = preset("memory");
  CHECK(assign_state(mem, 0.5).state_index == 1);
  CHECK_THROWS_AS(assign_state(mem, 0.5, RangePolicy::reject), OutOfRange);
  std::vector<double> v{0.5, 2.0, 6000.0};
  auto counts = state_counts(mem, v, RangePolicy::reject);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 2);
}

TEST_CASE("empty input counts are all zero") {
  for (const auto& name : preset_names()) {
    auto c = state_counts(preset(name), std::vector<double>{});
    CHECK(c.size() == preset(name).bin_count());
    CHECK(std::all_of(c.begin(), c.end(), [](std::size_t x) { return x == 0; }));
  }
}

TEST_CASE("presets match golden files") {
  for (const auto& name : preset_names()) {
    auto golden = load_spec(kPresetDir / (name + ".json"));
    const auto& p = preset(name);
    CHECK(golden.edges == p.edges);
    CHECK(golden.labels == p.labels);
    CHECK(golden.open_top == p.open_top);
    CHECK(golden.printed_states == p.printed_states);
    CHECK(golden.reference_counts == p.reference_counts);
  }
  const auto& compile = preset("compile");
  CHECK(compile.bin_count() == 14);
  CHECK(compile.edges[2] == 233);
  CHECK(compile.labels[2] == "213 to 405");
  CHECK(compile.printed_states.back() == 15);
  CHECK(preset("cpu").bin_count() == 10);
  CHECK(preset("memory").bin_count() == 13);
  CHECK(preset("oltp").bin_count() == 3);
  CHECK(preset("io").bin_count() == 3);
  CHECK_THROWS_AS(preset("gpu"), std::out_of_range);
}

TEST_CASE("assignment is monotone and edges land in the upper bin") {
  std::mt19937_64 rng(42);
  for (const auto& name : preset_names()) {
    const auto& spec = preset(name);
    auto values = random_values(spec, 10000, rng);
    std::sort(values.begin(), values.end());
    std::size_t prev = 1;
    for (double v : values) {
      auto s = assign_state(spec, v).state_index;
      CHECK(s >= 1);
      CHECK(s <= spec.bin_count());
      CHECK(s >= prev);
      prev = s;
    }
    const std::size_t last = spec.open_top ? spec.edges.size() : spec.edges.size() - 1;
    for (std::size_t i = 1; i < last; ++i) CHECK(assign_state(spec, spec.edges[i]).state_index == i + 1);
    auto counts = state_counts(spec, values);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == values.size());
  }
}

TEST_CASE("spec validation") {
  DiscretizationSpec s;
  s.edges = {0, 1, 1};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.edges = {0};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.open_top = true;
  CHECK_NOTHROW(s.validate());
  s.labels = {"a", "b"};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("json round trip") {
  for (const auto& name : preset_names()) {
    auto back = spec_from_json(spec_to_json(preset(name)));
    CHECK(spec_to_json(back) == spec_to_json(preset(name)));
  }
}

TEST_CASE("hierarchical: identical values give one bin") {
  std::vector<double> v(50, 3.5);
  auto r = hierarchical_discretize(v, 4);
  CHECK(r.spec.bin_count() == 1);
  CHECK(r.notice.has_value());
  CHECK(assign_state(r.spec, 3.5).state_index == 1);
}

TEST_CASE("hierarchical: 1..100 split at the median") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  auto r = hierarchical_discretize(v, 2);
  REQUIRE(r.spec.bin_count() == 2);
  CHECK_FALSE(r.notice);
  CHECK(std::abs(r.spec.edges[1] - 50.5) <= 0.5);
  auto c = state_counts(r.spec, v);
  CHECK(c[0] == 50);
  CHECK(c[1] == 50);
}

TEST_CASE("hierarchical: edges increasing, cover the data, deterministic") {
  std::mt19937_64 rng(9);
  std::lognormal_distribution<double> d(3.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(500);
    for (auto& x : v) x = std::round(d(rng) * 10) / 10;
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 12);
    auto r = hierarchical_discretize(v, k);
    CHECK_NOTHROW(r.spec.validate());
    CHECK(r.spec.bin_count() == k);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    CHECK(r.spec.edges.front() == *mn);
    for (double x : v) CHECK_NOTHROW(assign_state(r.spec, x, RangePolicy::reject));
    CHECK(std::find(v.begin(), v.end(), r.spec.edges[1]) != v.end());
    CHECK((r.spec.open_top || r.spec.edges.back() == *mx));
    auto again = hierarchical_discretize(v, k);
    CHECK(again.spec.edges == r.spec.edges);
  }
  std::vector<double> few{1, 1, 2, 2, 3};
  auto r = hierarchical_discretize(few, 5);
  CHECK(r.spec.bin_count() == 3);
  CHECK(r.notice.has_value());
}
