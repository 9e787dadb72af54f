#include <doctest.h>

#include <cmath>
#include <random>

#include "qosbn/learning.hpp"
#include "qosbn/structure.hpp"
#include "support/fixtures.hpp"

using namespace qosbn;
using qosbn::testing::make_var;

namespace {

BayesianNetwork single_binary() {
  NetworkDefinition def;
  def.variables = {make_var("A", {"a1", "a2"})};
  def.cpds.emplace_back(Cpt{"A", {}, {{0.5, 0.5}}});
  return BayesianNetwork(std::move(def));
}

std::vector<double> row_of(const BayesianNetwork& bn, const std::string& id, std::size_t r = 0) {
  return std::get<Cpt>(bn.cpd(bn.index_of(id))).rows[r];
}

void check_trace_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

// A -> B with two parent states and an unseen row when A = a2 never occurs.
BayesianNetwork ab_skeleton() {
  NetworkDefinition def;
  def.variables = {make_var("A", {"a1", "a2"}), make_var("B", {"b1", "b2", "b3"})};
  def.parent_map["B"] = {"A"};
  def.cpds.emplace_back(Cpt{"A", {}, {{0.5, 0.5}}});
  def.cpds.emplace_back(Cpt{"B", {"A"}, {{1, 0, 0}, {1, 0, 0}}});
  return BayesianNetwork(std::move(def));
}

BayesianNetwork planted_noisy_max() {
  NetworkDefinition def;
  def.variables = {make_var("P1", {"off", "on"}), make_var("P2", {"off", "lo", "hi"}),
                   make_var("Y", {"y0", "y1", "y2"})};
  def.parent_map["Y"] = {"P1", "P2"};
  def.cpds.emplace_back(Cpt{"P1", {}, {{0.6, 0.4}}});
  def.cpds.emplace_back(Cpt{"P2", {}, {{0.5, 0.3, 0.2}}});
  NoisyMaxCpd nm;
  nm.child = "Y";
  nm.parents = {"P1", "P2"};
  nm.off_states = {0, 0};
  nm.leak = {0.85, 0.1, 0.05};
  nm.link_params = {{{1, 0, 0}, {0.3, 0.5, 0.2}}, {{1, 0, 0}, {0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}};
  def.cpds.emplace_back(nm);
  return BayesianNetwork(std::move(def));
}

}  // namespace

TEST_CASE("mle frequency counting") {
  std::vector<Record> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({{"A", i < 7 ? "a1" : "a2"}});
  auto ds = make_dataset({make_var("A", {"a1", "a2"})}, recs);
  auto bn = learn_mle(single_binary(), ds, 0.0);
  CHECK(row_of(bn, "A")[0] == doctest::Approx(0.7).epsilon(1e-15));
  bn = learn_mle(single_binary(), ds, 1.0);
  CHECK(row_of(bn, "A")[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mle empty parent row becomes uniform") {
  auto ds = make_dataset(ab_skeleton().variables(), {{{"A", "a1"}, {"B", "b2"}}});
  auto bn = learn_mle(ab_skeleton(), ds, 0.0);
  CHECK(row_of(bn, "B", 1) == std::vector<double>(3, 1.0 / 3.0));
  CHECK(row_of(bn, "B", 0) == std::vector<double>{0, 1, 0});
}

TEST_CASE("mle counts only fully observed families") {
  // B's row totals add up to the three rows that observe both A and B.
  auto ds = make_dataset(ab_skeleton().variables(),
                         {{{"A", "a1"}, {"B", "b1"}}, {{"A", "a1"}, {"B", "b1"}},
                          {{"A", "a2"}, {"B", "b3"}}, {{"B", "b2"}}, {{"A", "a2"}}});
  auto bn = learn_mle(ab_skeleton(), ds, 0.0);
  CHECK(row_of(bn, "B", 0) == std::vector<double>{1, 0, 0});
  CHECK(row_of(bn, "B", 1) == std::vector<double>{0, 0, 1});
  CHECK(row_of(bn, "A")[0] == doctest::Approx(0.5));
}

TEST_CASE("mle errors") {
  auto ds = make_dataset({make_var("B", {"b1"})}, {});
  CHECK_THROWS_AS(learn_mle(single_binary(), ds), DataError);
  auto nm = planted_noisy_max();
  auto full = make_dataset(nm.variables(), {});
  CHECK_THROWS_AS(learn_mle(nm, full), std::invalid_argument);
}

TEST_CASE("em on a single node with one missing record stays at one half") {
  auto ds = make_dataset({make_var("A", {"a1", "a2"})}, {{{"A", "a1"}}, {{"A", "a2"}}, {}});
  EmConfig cfg;
  cfg.pseudocount = 0.0;
  auto r = learn_em(single_binary(), ds, cfg);
  CHECK(row_of(r.network, "A")[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.converged);
}

TEST_CASE("em on complete data equals mle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    testing::RandomNetworkOptions o;
    o.max_nodes = 6;
    auto truth = testing::random_network(rng, o);
    auto ds = sample_dataset(truth, 2000, rng);
    for (double alpha : {0.0, 1.0}) {
      EmConfig cfg;
      cfg.pseudocount = alpha;
      auto em = learn_em(truth, ds, cfg);
      auto mle = learn_mle(truth, ds, alpha);
      CHECK(testing::cpt_linf(em.network, mle) <= 1e-12);
      check_trace_monotone(em.trace);
    }
  }
}

TEST_CASE("em trace never decreases under missing data") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    testing::RandomNetworkOptions o;
    o.min_nodes = 4;
    o.max_nodes = 6;
    o.max_states = 3;
    o.noisy_max_probability = trial % 2 ? 0.6 : 0.0;
    auto truth = testing::random_network(rng, o);
    auto ds = erase_cells(sample_dataset(truth, 1500, rng), 0.3, rng);
    EmConfig cfg;
    cfg.pseudocount = trial % 3 == 0 ? 0.0 : 1.0;
    cfg.max_iterations = 60;
    auto r = learn_em(uniform_parameters(truth), ds, cfg);
    CHECK(r.trace.size() >= 2);
    check_trace_monotone(r.trace);
    if (cfg.pseudocount == 0.0)
      CHECK(r.trace.back() == doctest::Approx(log_likelihood(r.network, ds)).epsilon(1e-9));
  }
}

TEST_CASE("em result does not depend on thread count") {
  std::mt19937_64 rng(5);
  auto truth = testing::planted_nbn(rng, 4);
  auto ds = erase_cells(sample_dataset(truth, 3000, rng), 0.3, rng);
  EmConfig one, four;
  one.max_iterations = four.max_iterations = 20;
  four.threads = 4;
  auto a = learn_em(truth, ds, one);
  auto b = learn_em(truth, ds, four);
  CHECK(a.trace == b.trace);
  CHECK(testing::cpt_linf(a.network, b.network) == 0.0);
}

TEST_CASE("planted naive Bayes recovery with missing cells") {
  std::mt19937_64 rng(99);
  auto truth = testing::planted_nbn(rng, 3);
  auto ds = erase_cells(sample_dataset(truth, 20000, rng), 0.2, rng);
  auto r = learn_em(uniform_parameters(truth), ds);
  CHECK(testing::cpt_linf(r.network, truth) <= 0.03);
}

TEST_CASE("noisy-max em improves and approaches the planted links") {
  auto truth = planted_noisy_max();
  std::mt19937_64 rng(3);
  auto ds = sample_dataset(truth, 20000, rng);
  EmConfig cfg;
  auto r = learn_em(uniform_parameters(truth), ds, cfg);
  check_trace_monotone(r.trace);
  const auto& nm = std::get<NoisyMaxCpd>(r.network.cpd(2));
  CHECK(nm.off_states == std::vector<std::size_t>{0, 0});
  const auto& want = std::get<NoisyMaxCpd>(truth.cpd(2));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(nm.leak[k] - want.leak[k]) <= 0.03);
    CHECK(std::abs(nm.link_params[0][1][k] - want.link_params[0][1][k]) <= 0.05);
    CHECK(std::abs(nm.link_params[1][2][k] - want.link_params[1][2][k]) <= 0.05);
  }
  CHECK(log_likelihood(r.network, ds) > log_likelihood(uniform_parameters(truth), ds));

  auto erased = erase_cells(ds, 0.3, rng);
  auto m = learn_em(uniform_parameters(truth), erased, cfg);
  check_trace_monotone(m.trace);
}

TEST_CASE("noisy-max off state follows the most frequent parent state") {
  auto truth = planted_noisy_max();
  std::mt19937_64 rng(8);
  auto ds = sample_dataset(truth, 500, rng);
  // Make P2 = hi the most common state.
  const auto p2 = ds.require_column("P2");
  for (std::size_t i = 0; i < ds.size(); i += 2) ds.rows[i][p2] = 2;
  EmConfig cfg;
  cfg.max_iterations = 3;
  auto r = learn_em(uniform_parameters(truth), ds, cfg);
  const auto& nm = std::get<NoisyMaxCpd>(r.network.cpd(2));
  CHECK(nm.off_states[1] == 2);
  CHECK(nm.link_params[1][2] == std::vector<double>{1, 0, 0});
}

TEST_CASE("em requires an observed cell per variable") {
  auto ds = make_dataset(ab_skeleton().variables(), {{{"A", "a1"}}});
  CHECK_THROWS_AS(learn_em(ab_skeleton(), ds), DataError);
  EmConfig bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("log-likelihood") {
  auto bn = testing::chain_ab();
  auto one = make_dataset(bn.variables(), {{{"A", "a1"}, {"B", "b1"}}});
  CHECK(log_likelihood(bn, one) == doctest::Approx(std::log(0.12)).epsilon(1e-14));
  auto empty = make_dataset(bn.variables(), {{}});
  CHECK(std::abs(log_likelihood(bn, empty)) <= 1e-15);
  std::mt19937_64 rng(2);
  auto ds = erase_cells(sample_dataset(bn, 100, rng), 0.4, rng);
  CHECK(log_likelihood(bn, concat(ds, ds)) == doctest::Approx(2 * log_likelihood(bn, ds)).epsilon(1e-12));

  NetworkDefinition def;
  def.variables = {make_var("A", {"a1", "a2"})};
  def.cpds.emplace_back(Cpt{"A", {}, {{1.0, 0.0}}});
  BayesianNetwork det(def);
  auto bad = make_dataset(det.variables(), {{{"A", "a1"}}, {{"A", "a2"}}});
  auto rep = log_likelihood_report(det, bad);
  CHECK(std::isinf(rep.value));
  CHECK(rep.zero_rows == std::vector<std::size_t>{1});
}

TEST_CASE("sampling frequencies follow the network") {
  auto bn = testing::chain_ab();
  std::mt19937_64 rng(12);
  auto ds = sample_dataset(bn, 40000, rng);
  auto fit = learn_mle(bn, ds, 0.0);
  CHECK(testing::cpt_linf(fit, bn) <= 0.015);
}
