#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qosbn/dataset.hpp"
#include "support/fixtures.hpp"

using namespace qosbn;
using qosbn::testing::make_var;

namespace {
Dataset small() {
  return make_dataset({make_var("A", {"a1", "a2"}), make_var("B", {"b1", "b2", "b3"})},
                      {{{"A", "a1"}, {"B", "b2"}}, {{"A", "a2"}}, {{"B", "b3"}}, {}});
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}
}  // namespace

TEST_CASE("records round trip through the row encoding") {
  auto ds = small();
  CHECK(ds.size() == 4);
  CHECK(ds.rows[0] == std::vector<int>{0, 1});
  CHECK(ds.rows[1] == std::vector<int>{1, kMissing});
  CHECK(ds.rows[3] == std::vector<int>{kMissing, kMissing});
  CHECK(ds.record(2) == Record{{"B", "b3"}});
  CHECK_THROWS_AS(ds.add({{"C", "x"}}), DataError);
  CHECK_THROWS_AS(ds.add({{"A", "a9"}}), DataError);
}

TEST_CASE("slicing helpers") {
  auto ds = small();
  auto f = filter_equal(ds, "A", "a1");
  CHECK(f.size() == 1);
  auto d = drop_variable(ds, "A");
  CHECK(d.width() == 1);
  CHECK(d.rows[0] == std::vector<int>{1});
  auto r = restrict_states(ds, "B", {"b3", "b2"});
  CHECK(r.rows[0][1] == 1);
  CHECK(r.rows[2][1] == 0);
  CHECK_THROWS_AS(restrict_states(ds, "B", {"b1"}), DataError);
  auto c = concat(ds, ds);
  CHECK(c.size() == 8);
  std::vector<std::size_t> idx{3, 0};
  auto s = subset(ds, idx);
  CHECK(s.rows[1] == ds.rows[0]);
}

TEST_CASE("binding maps dataset labels onto network states") {
  auto bn = qosbn::testing::chain_ab();
  auto ds = make_dataset({make_var("B", {"b2", "b1"}), make_var("A", {"a1", "a2"})},
                         {{{"A", "a2"}, {"B", "b2"}}});
  auto b = bind_columns(bn, ds);
  CHECK(b.translate(ds.rows[0]) == std::vector<int>{1, 1});
  auto missing = make_dataset({make_var("A", {"a1", "a2"})}, {});
  CHECK_THROWS_AS(bind_columns(bn, missing), DataError);
  auto alien = make_dataset({make_var("A", {"a1", "zz"}), make_var("B", {"b1", "b2"})}, {});
  CHECK_THROWS_AS(bind_columns(bn, alien), DataError);
}

TEST_CASE("jsonl file with schema sidecar round trips byte-stably") {
  auto dir = std::filesystem::temp_directory_path() / "qosbn_test_dataset";
  std::filesystem::create_directories(dir);
  auto ds = small();
  save_dataset(ds, dir / "d.jsonl");
  auto back = load_dataset(dir / "d.jsonl");
  CHECK(back.rows == ds.rows);
  CHECK(back.variables[1].states == ds.variables[1].states);
  save_dataset(back, dir / "e.jsonl");
  CHECK(slurp(dir / "d.jsonl") == slurp(dir / "e.jsonl"));
  CHECK(slurp(dir / "d.jsonl").substr(0, 20) == "{\"A\":\"a1\",\"B\":\"b2\"}\n");

  std::filesystem::remove(schema_path(dir / "d.jsonl"));
  auto inferred = load_dataset(dir / "d.jsonl");
  CHECK(inferred.variables[1].states == std::vector<std::string>{"b2", "b3"});
  std::filesystem::remove_all(dir);
}
