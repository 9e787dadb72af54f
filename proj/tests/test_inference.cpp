#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qosbn/inference.hpp"
#include "support/fixtures.hpp"

using namespace qosbn;
namespace t = qosbn::testing;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("root posterior without evidence is its prior") {
  auto bn = t::chain_ab();
  auto p = posterior(bn, {}, "A");
  CHECK(max_abs_diff(p.distribution, {0.3, 0.7}) <= 1e-15);
  CHECK(p.evidence_probability == doctest::Approx(1.0));
}

TEST_CASE("chain diagnosis against the enumeration oracle") {
  auto bn = t::chain_ab();
  EvidenceSet e;
  e.hard["B"] = "b1";
  auto joint = enumerate_joint(bn, e);
  auto oracle = posterior_from_joint(bn, joint, "A");
  CHECK(oracle.distribution[0] == doctest::Approx(0.12 / 0.47).epsilon(1e-14));
  auto p = posterior(bn, e, "A");
  CHECK(max_abs_diff(p.distribution, oracle.distribution) <= 1e-9);
  CHECK(p.distribution[0] == doctest::Approx(0.2553).epsilon(1e-3));
  CHECK(p.evidence_probability == doctest::Approx(0.47).epsilon(1e-14));
}

TEST_CASE("enumerate_joint examples") {
  auto bn = t::chain_ab();
  auto j = enumerate_joint(bn, {});
  REQUIRE(j.table.size() == 4);
  const auto& v = j.table.values();
  CHECK(v[0] == doctest::Approx(joint_probability(bn, {{"A", "a1"}, {"B", "b1"}})));
  CHECK(v[3] == doctest::Approx(joint_probability(bn, {{"A", "a2"}, {"B", "b2"}})));
  CHECK(j.evidence_probability == doctest::Approx(1.0));

  EvidenceSet e;
  e.soft["A"] = {0.5, 0.1};
  auto w = enumerate_joint(bn, e);
  CHECK(w.evidence_probability <= 1.0);
  CHECK_THROWS_AS(enumerate_joint(bn, {}, 3), StateSpaceTooLarge);
}

TEST_CASE("impossible evidence") {
  NetworkDefinition def;
  def.variables = {t::make_var("A", {"a1", "a2"}), t::make_var("B", {"b1", "b2"})};
  def.parent_map["B"] = {"A"};
  def.cpds.emplace_back(Cpt{"A", {}, {{1.0, 0.0}}});
  def.cpds.emplace_back(Cpt{"B", {"A"}, {{1.0, 0.0}, {0.5, 0.5}}});
  BayesianNetwork bn(def);
  EvidenceSet e;
  e.hard["B"] = "b2";
  auto j = enumerate_joint(bn, e);
  CHECK(j.impossible);
  CHECK(j.table.sum() == 0.0);
  try {
    posterior(bn, e, "A");
    FAIL("expected ImpossibleEvidence");
  } catch (const ImpossibleEvidence& ex) {
    CHECK(std::string(ex.what()).find("B=b2") != std::string::npos);
  }
  // Querying the observed variable still checks the evidence.
  CHECK_THROWS_AS(posterior(bn, e, "B"), ImpossibleEvidence);
}

TEST_CASE("query under hard evidence returns its indicator") {
  auto bn = t::chain_ab();
  EvidenceSet e;
  e.hard["B"] = "b2";
  auto p = posterior(bn, e, "B");
  CHECK(p.distribution == std::vector<double>{0.0, 1.0});
}

TEST_CASE("invalid evidence is rejected") {
  auto bn = t::chain_ab();
  EvidenceSet e;
  e.hard["Z"] = "z";
  CHECK_THROWS_AS(posterior(bn, e, "A"), InvalidEvidence);
  e = {};
  e.hard["A"] = "a9";
  CHECK_THROWS_AS(posterior(bn, e, "B"), InvalidEvidence);
  e = {};
  e.soft["A"] = {0.0, 0.0};
  CHECK_THROWS_AS(posterior(bn, e, "B"), InvalidEvidence);
  e = {};
  e.soft["A"] = {1.0};
  CHECK_THROWS_AS(posterior(bn, e, "B"), InvalidEvidence);
  e = {};
  e.hard["A"] = "a1";
  e.soft["A"] = {1.0, 1.0};
  CHECK_THROWS_AS(posterior(bn, e, "B"), InvalidEvidence);
}

TEST_CASE("variable elimination matches enumeration on random networks") {
  std::mt19937_64 rng(2024);
  t::RandomNetworkOptions opts;
  opts.min_nodes = 8;
  opts.max_nodes = 8;
  opts.max_states = 4;
  opts.noisy_max_probability = 0.3;
  for (int trial = 0; trial < 30; ++trial) {
    auto bn = t::random_network(rng, opts);
    auto e = t::random_evidence(bn, rng);
    auto joint = enumerate_joint(bn, e);
    InferenceEngine engine(bn);
    for (const auto& v : bn.variables()) {
      auto oracle = posterior_from_joint(bn, joint, v.id);
      auto p = engine.posterior(e, v.id);
      CHECK(max_abs_diff(p.distribution, oracle.distribution) <= 1e-9);
      CHECK(p.evidence_probability == doctest::Approx(joint.evidence_probability).epsilon(1e-9));
    }
  }
}

TEST_CASE("decomposed noisy-max path agrees with expansion") {
  std::mt19937_64 rng(99);
  t::RandomNetworkOptions opts;
  opts.min_nodes = 6;
  opts.max_nodes = 7;
  opts.edge_probability = 0.7;
  opts.noisy_max_probability = 1.0;
  InferenceOptions tiny;
  tiny.noisy_max_table_limit = 1;
  int decomposed = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto bn = t::random_network(rng, opts);
    auto e = t::random_evidence(bn, rng);
    InferenceEngine expanded(bn), factored(bn, tiny);
    for (std::size_t i = 0; i < bn.size(); ++i) decomposed += factored.uses_decomposition(i);
    for (const auto& v : bn.variables()) {
      auto a = expanded.posterior(e, v.id);
      auto b = factored.posterior(e, v.id);
      CHECK(max_abs_diff(a.distribution, b.distribution) <= 1e-9);
    }
  }
  CHECK(decomposed > 0);
}

TEST_CASE("elimination order does not change posteriors") {
  std::mt19937_64 rng(17);
  t::RandomNetworkOptions opts;
  opts.min_nodes = 7;
  opts.max_nodes = 7;
  for (int trial = 0; trial < 10; ++trial) {
    auto bn = t::random_network(rng, opts);
    auto e = t::random_evidence(bn, rng);
    std::vector<std::string> ids;
    for (const auto& v : bn.variables()) ids.push_back(v.id);
    auto reference = posterior(bn, e, ids.back());
    for (int k = 0; k < 5; ++k) {
      std::shuffle(ids.begin(), ids.end(), rng);
      InferenceOptions o;
      o.elimination_order = ids;
      auto p = posterior(bn, e, bn.variables().back().id, o);
      CHECK(max_abs_diff(p.distribution, reference.distribution) <= 1e-9);
    }
  }
}

TEST_CASE("min-fill order is deterministic") {
  std::mt19937_64 rng(8);
  auto bn = t::random_network(rng);
  InferenceEngine engine(bn);
  auto a = engine.elimination_order({}, {0});
  auto b = engine.elimination_order({}, {0});
  CHECK(a == b);
  CHECK(a.size() == bn.size() - 1);
}

TEST_CASE("uniform soft evidence and one-hot soft evidence") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto bn = t::random_network(rng);
    auto e = t::random_evidence(bn, rng, 0.2, 0.0);
    const auto& target = bn.variable(0);
    if (e.hard.count(target.id)) continue;
    const auto& q = bn.variables().back().id;

    auto base = posterior(bn, e, q);
    EvidenceSet uniform = e;
    uniform.soft[target.id] = std::vector<double>(target.cardinality(), 0.37);
    CHECK(max_abs_diff(posterior(bn, uniform, q).distribution, base.distribution) <= 1e-12);

    EvidenceSet hard = e, onehot = e;
    hard.hard[target.id] = target.states[0];
    onehot.soft[target.id] = std::vector<double>(target.cardinality(), 0.0);
    onehot.soft[target.id][0] = 1.0;
    auto ph = posterior(bn, hard, q);
    auto ps = posterior(bn, onehot, q);
    CHECK(max_abs_diff(ph.distribution, ps.distribution) <= 1e-12);
    CHECK(ph.evidence_probability == doctest::Approx(ps.evidence_probability).epsilon(1e-12));
  }
}

TEST_CASE("P(e) is the same before or after multiplying factors") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    auto bn = t::random_network(rng);
    auto e = t::random_evidence(bn, rng);
    const auto indexed = resolve_evidence(bn, e);
    // Evidence applied to each factor before elimination...
    const double before = InferenceEngine(bn).evidence_probability(indexed);
    // ...and applied once to the fully multiplied joint.
    Factor joint = Factor::scalar(1.0);
    for (std::size_t i = 0; i < bn.size(); ++i) {
      std::vector<std::size_t> scope = bn.parents(i);
      scope.push_back(i);
      std::vector<std::size_t> cards;
      for (auto v : scope) cards.push_back(bn.cardinality(v));
      std::vector<double> vals;
      for (std::size_t r = 0; r < configuration_count(cards); ++r) {
        auto s = mixed_radix_decode(r, cards);
        const auto child = s.back();
        s.pop_back();
        vals.push_back(bn.conditional(i, child, s));
      }
      joint = factor_multiply(joint, Factor(scope, cards, vals));
    }
    const double after = apply_evidence(joint, indexed).sum();
    CHECK(before == doctest::Approx(after).epsilon(1e-12));
  }
}

TEST_CASE("map_state picks the argmax with lowest-index ties") {
  CHECK(argmax_lowest({0.1, 0.87, 0.03}) == 1);
  CHECK(argmax_lowest({0.5, 0.5}) == 0);
  std::vector<double> scaled{0.1 * 7, 0.87 * 7, 0.03 * 7};
  CHECK(argmax_lowest(scaled) == 1);

  NetworkDefinition def;
  def.variables = {t::make_var("A", {"a1", "a2"})};
  def.cpds.emplace_back(Cpt{"A", {}, {{0.5, 0.5}}});
  BayesianNetwork bn(def);
  CHECK(map_state(bn, {}, "A") == "a1");
  CHECK(map_state(t::chain_ab(), {}, "A") == "a2");
}
