#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>

#include "qosbn/network_io.hpp"
#include "qosbn/service.hpp"
#include "qosbn/structure.hpp"
#include "support/fixtures.hpp"

using namespace qosbn;
using nlohmann::json;
using qosbn::testing::make_var;

namespace {

BayesianNetwork factor_model() {
  const std::vector<Variable> schema{
      make_var("cloud", {"aws", "gce"}),        make_var("region", {"eu", "us"}),
      make_var("vm_size", {"large", "micro", "small"}), make_var("cpu_type", {"x", "y"}),
      make_var("benchmark", {"cpu", "io"}),     make_var("time_of_day", {"00-06", "06-12"}),
      make_var("day_of_week", {"mon", "tue"}),  make_var("qos_value", {"1 to 10", "11 to 20", "greater than 20"})};
  std::mt19937_64 rng(4);
  auto skeleton = build_nbn(StructureSpec{}, schema);
  auto def = skeleton.definition();
  for (auto& cpd : def.cpds) {
    auto& t = std::get<Cpt>(cpd);
    for (auto& row : t.rows) row = qosbn::testing::random_distribution(row.size(), rng);
  }
  return BayesianNetwork(std::move(def));
}

void add_models(ModelRegistry& r) {
  r.add("chain", qosbn::testing::chain_ab(), "fixture");
  r.add("factors", factor_model(), "synthetic");
}

}  // namespace

TEST_CASE("model listing") {
  ModelRegistry empty;
  const auto none = handle_list_models(empty);
  CHECK(none.status == 200);
  CHECK(none.body.dump() == "[]");

  ModelRegistry r;
  add_models(r);
  const auto list = handle_list_models(r).body;
  REQUIRE(list.size() == 2);
  CHECK(list[0]["id"] == "chain");
  CHECK(list[1]["id"] == "factors");
  CHECK(list[1]["variables"].size() == 8);
  const auto bn = factor_model();
  for (std::size_t v = 0; v < bn.size(); ++v) {
    CHECK(list[1]["variables"][v]["id"] == bn.variable(v).id);
    CHECK(list[1]["variables"][v]["states"] == json(bn.variable(v).states));
  }
  CHECK(handle_list_models(r).body.dump() == list.dump());
  CHECK_THROWS_AS(r.add("chain", qosbn::testing::chain_ab()),
                  std::invalid_argument);
}

TEST_CASE("inference handler") {
  ModelRegistry r;
  add_models(r);
  const auto bn = factor_model();

  SUBCASE("empty evidence gives the prior") {
    const auto res = handle_infer(r, "factors", R"({"query": ["qos_value"]})");
    REQUIRE(res.status == 200);
    const auto expected = posterior(bn, {}, "qos_value");
    CHECK(res.body["posteriors"][0]["probabilities"] == json(expected.distribution));
    CHECK(res.body["evidence_probability"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hard evidence matches the inference module exactly") {
    EvidenceSet e;
    e.hard = {{"region", "us"}, {"cloud", "aws"}, {"vm_size", "micro"}};
    const auto res = handle_infer(
        r, "factors", json{{"evidence", evidence_to_json(e)}, {"query", {"qos_value"}}}.dump());
    REQUIRE(res.status == 200);
    const auto expected = posterior(bn, e, "qos_value");
    CHECK(res.body["posteriors"][0]["probabilities"] == json(expected.distribution));
    CHECK(res.body["evidence_probability"] == expected.evidence_probability);
  }
  SUBCASE("soft evidence") {
    EvidenceSet e;
    e.soft["A"] = {0.8, 0.2};
    const auto res =
        handle_infer(r, "chain", json{{"evidence", evidence_to_json(e)}, {"query", "B"}}.dump());
    REQUIRE(res.status == 200);
    CHECK(res.body["posteriors"][0]["probabilities"] ==
          json(posterior(qosbn::testing::chain_ab(), e, "B").distribution));
  }
  SUBCASE("no query lists every unobserved variable") {
    const auto res = handle_infer(r, "chain", R"({"evidence": {"hard": {"A": "a1"}}})");
    REQUIRE(res.status == 200);
    REQUIRE(res.body["posteriors"].size() == 1);
    CHECK(res.body["posteriors"][0]["variable"] == "B");
    CHECK(res.body["evidence_probability"].get<double>() == doctest::Approx(0.3));
  }
  SUBCASE("errors") {
    CHECK(handle_infer(r, "nope", "{}").status == 404);
    CHECK(handle_infer(r, "chain", "{not json").status == 400);
    CHECK(handle_infer(r, "chain", "[1]").status == 400);
    CHECK(handle_infer(r, "chain", R"({"evidence": {"hard": {"A": "a9"}}})").status == 422);
    CHECK(handle_infer(r, "chain", R"({"evidence": {"hard": {"Z": "a1"}}})").status == 422);
    CHECK(handle_infer(r, "chain", R"({"evidence": {"soft": {"A": [0, 0]}}})").status == 422);
    CHECK(handle_infer(r, "chain", R"({"query": ["Q"]})").status == 422);
    CHECK(handle_infer(r, "chain", R"({"query": 3})").status == 422);
  }
  SUBCASE("impossible evidence") {
    ModelRegistry det;
    NetworkDefinition def;
    def.variables = {make_var("A", {"a1", "a2"}), make_var("B", {"b1", "b2"})};
    def.parent_map["B"] = {"A"};
    def.cpds.emplace_back(Cpt{"A", {}, {{0.5, 0.5}}});
    def.cpds.emplace_back(Cpt{"B", {"A"}, {{1.0, 0.0}, {0.0, 1.0}}});
    det.add("det", BayesianNetwork(std::move(def)));
    const auto res = handle_infer(det, "det", R"({"evidence": {"hard": {"A": "a1", "B": "b2"}}})");
    CHECK(res.status == 409);
    CHECK(res.body["error"].get<std::string>().find("impossible evidence") != std::string::npos);
  }
  SUBCASE("identical requests give identical bodies") {
    const std::string body = R"({"evidence": {"hard": {"cloud": "gce"}}, "query": ["qos_value", "cpu_type"]})";
    CHECK(handle_infer(r, "factors", body).body.dump() == handle_infer(r, "factors", body).body.dump());
  }
}

TEST_CASE("registry swap is atomic for readers") {
  ModelRegistry r;
  r.add("chain", qosbn::testing::chain_ab());
  const auto before = r.snapshot();
  ModelRegistry::Models next;
  next.emplace("other", SessionModel{"other", std::make_shared<const BayesianNetwork>(factor_model()), ""});
  r.replace(std::move(next));
  CHECK(before->count("chain") == 1);
  CHECK(r.snapshot()->count("other") == 1);
  CHECK(r.snapshot()->count("chain") == 0);
}

TEST_CASE("model directory loading") {
  const auto dir = std::filesystem::temp_directory_path() / "qosbn_service_models";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  save_network(qosbn::testing::chain_ab(), dir / "b.json");
  save_network(factor_model(), dir / "a.json");
  const auto models = load_model_directory(dir);
  REQUIRE(models.size() == 2);
  CHECK(models.begin()->first == "a");
  CHECK(models.at("b").network->size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("http endpoints") {
  ModelRegistry registry;
  add_models(registry);
  DiagnosisServer server(registry, {"127.0.0.1", 0, true});
  const int port = server.bind();
  std::thread t([&] { server.run(); });

  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(std::chrono::seconds(5));
  auto health = cli.Get("/healthz");
  for (int i = 0; i < 50 && !health; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    health = cli.Get("/healthz");
  }
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto models = cli.Get("/models");
  REQUIRE(models);
  CHECK(models->body == handle_list_models(registry).body.dump());

  const std::string body = R"({"evidence": {"hard": {"region": "us"}}, "query": ["qos_value"]})";
  auto infer = cli.Post("/models/factors/infer", body, "application/json");
  REQUIRE(infer);
  CHECK(infer->status == 200);
  CHECK(infer->body == handle_infer(registry, "factors", body).body.dump());

  auto missing = cli.Post("/models/none/infer", "{}", "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto invalid = cli.Post("/models/chain/infer", R"({"evidence": {"hard": {"A": "zz"}}})", "application/json");
  REQUIRE(invalid);
  CHECK(invalid->status == 422);

  auto preflight = cli.Options("/models/chain/infer");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  server.stop();
  t.join();
}
