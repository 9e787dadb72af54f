#pragma once

// Shared builders for unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qosbn/inference.hpp"
#include "qosbn/network.hpp"

namespace qosbn::testing {

inline Variable make_var(const std::string& id, std::vector<std::string> states) {
  return Variable{id, id, std::move(states)};
}

inline std::vector<std::string> numbered_states(const std::string& prefix, std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(prefix + std::to_string(i + 1));
  return s;
}

/// A -> B with P(a1) = 0.3, P(b1 | a1) = 0.4, P(b1 | a2) = 0.5.
inline BayesianNetwork chain_ab() {
  NetworkDefinition def;
  def.variables = {make_var("A", {"a1", "a2"}), make_var("B", {"b1", "b2"})};
  def.parent_map["B"] = {"A"};
  def.cpds.emplace_back(Cpt{"A", {}, {{0.3, 0.7}}});
  def.cpds.emplace_back(Cpt{"B", {"A"}, {{0.4, 0.6}, {0.5, 0.5}}});
  return BayesianNetwork(std::move(def));
}

inline std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng,
                                               double floor = 0.0) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = expo(rng) + floor);
  for (auto& v : p) v /= s;
  return p;
}

struct RandomNetworkOptions {
  std::size_t min_nodes = 3;
  std::size_t max_nodes = 10;
  std::size_t min_states = 2;
  std::size_t max_states = 5;
  std::size_t max_parents = 3;
  double edge_probability = 0.4;
  double noisy_max_probability = 0.0;
};

/// Random DAG over nodes X0..Xn-1 (edges only from lower to higher index),
/// strictly positive random distributions, optionally some noisy-MAX nodes.
inline BayesianNetwork random_network(std::mt19937_64& rng, const RandomNetworkOptions& o = {}) {
  std::uniform_int_distribution<std::size_t> nodes(o.min_nodes, o.max_nodes);
  std::uniform_int_distribution<std::size_t> states(o.min_states, o.max_states);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = nodes(rng);

  NetworkDefinition def;
  std::vector<std::size_t> cards(n);
  for (std::size_t i = 0; i < n; ++i) {
    cards[i] = states(rng);
    def.variables.push_back(
        make_var("X" + std::to_string(i), numbered_states("s", cards[i])));
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::string> parents;
    std::vector<std::size_t> pidx;
    for (std::size_t i = 0; i < j && parents.size() < o.max_parents; ++i) {
      if (unit(rng) < o.edge_probability) {
        parents.push_back(def.variables[i].id);
        pidx.push_back(i);
      }
    }
    if (!parents.empty()) def.parent_map[def.variables[j].id] = parents;

    if (!parents.empty() && unit(rng) < o.noisy_max_probability) {
      NoisyMaxCpd nm;
      nm.child = def.variables[j].id;
      nm.parents = parents;
      nm.leak = random_distribution(cards[j], rng, 0.05);
      for (auto p : pidx) {
        std::vector<std::vector<double>> table;
        for (std::size_t s = 0; s < cards[p]; ++s) {
          if (s == 0) {
            std::vector<double> off(cards[j], 0.0);
            off[0] = 1.0;
            table.push_back(off);
          } else {
            table.push_back(random_distribution(cards[j], rng, 0.05));
          }
        }
        nm.link_params.push_back(std::move(table));
        nm.off_states.push_back(0);
      }
      def.cpds.emplace_back(std::move(nm));
    } else {
      std::size_t rows = 1;
      for (auto p : pidx) rows *= cards[p];
      Cpt cpt{def.variables[j].id, parents, {}};
      for (std::size_t r = 0; r < rows; ++r)
        cpt.rows.push_back(random_distribution(cards[j], rng, 0.05));
      def.cpds.emplace_back(std::move(cpt));
    }
  }
  return BayesianNetwork(std::move(def));
}

/// Each variable independently gets hard evidence, soft evidence, or none.
inline EvidenceSet random_evidence(const BayesianNetwork& bn, std::mt19937_64& rng,
                                   double hard_p = 0.2, double soft_p = 0.2) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EvidenceSet e;
  for (const auto& v : bn.variables()) {
    const double u = unit(rng);
    if (u < hard_p) {
      std::uniform_int_distribution<std::size_t> pick(0, v.cardinality() - 1);
      e.hard[v.id] = v.states[pick(rng)];
    } else if (u < hard_p + soft_p) {
      std::vector<double> lik(v.cardinality());
      for (auto& l : lik) l = unit(rng) + 0.01;
      e.soft[v.id] = lik;
    }
  }
  return e;
}

/// Class C with features F1..Fn, each depending on C only.
inline BayesianNetwork planted_nbn(std::mt19937_64& rng, std::size_t features,
                                   std::size_t class_states = 3, std::size_t feature_states = 3) {
  NetworkDefinition def;
  def.variables.push_back(make_var("C", numbered_states("c", class_states)));
  def.cpds.emplace_back(Cpt{"C", {}, {random_distribution(class_states, rng, 0.3)}});
  for (std::size_t i = 1; i <= features; ++i) {
    const std::string id = "F" + std::to_string(i);
    def.variables.push_back(make_var(id, numbered_states("v", feature_states)));
    def.parent_map[id] = {"C"};
    Cpt cpt{id, {"C"}, {}};
    for (std::size_t r = 0; r < class_states; ++r)
      cpt.rows.push_back(random_distribution(feature_states, rng, 0.1));
    def.cpds.emplace_back(std::move(cpt));
  }
  return BayesianNetwork(std::move(def));
}

/// Class C plus a chain F1 -> F2 -> ... -> Fn where each link also depends on
/// C. P(Fi = s | c, f) is proportional to 1 + 6[s = f] + 2[s = c].
inline BayesianNetwork planted_tan_chain(std::size_t features, std::size_t states = 3) {
  NetworkDefinition def;
  def.variables.push_back(make_var("C", numbered_states("c", states)));
  def.cpds.emplace_back(Cpt{"C", {}, {std::vector<double>(states, 1.0 / static_cast<double>(states))}});
  auto row = [&](std::size_t c, std::optional<std::size_t> f) {
    std::vector<double> r(states);
    double z = 0.0;
    for (std::size_t s = 0; s < states; ++s)
      z += (r[s] = 1.0 + (f && s == *f ? 6.0 : 0.0) + (s == c ? 2.0 : 0.0));
    for (auto& v : r) v /= z;
    return r;
  };
  for (std::size_t i = 1; i <= features; ++i) {
    const std::string id = "F" + std::to_string(i);
    def.variables.push_back(make_var(id, numbered_states("v", states)));
    Cpt cpt{id, {"C"}, {}};
    if (i == 1) {
      for (std::size_t c = 0; c < states; ++c) cpt.rows.push_back(row(c, std::nullopt));
    } else {
      cpt.parents.push_back("F" + std::to_string(i - 1));
      for (std::size_t c = 0; c < states; ++c)
        for (std::size_t f = 0; f < states; ++f) cpt.rows.push_back(row(c, f));
    }
    def.parent_map[id] = cpt.parents;
    def.cpds.emplace_back(std::move(cpt));
  }
  return BayesianNetwork(std::move(def));
}

/// Largest absolute difference between matching CPT entries.
inline double cpt_linf(const BayesianNetwork& a, const BayesianNetwork& b) {
  double worst = 0.0;
  for (const auto& cpd : a.definition().cpds) {
    const auto& ca = std::get<Cpt>(cpd);
    const auto& cb = std::get<Cpt>(b.cpd(b.index_of(ca.child)));
    for (std::size_t r = 0; r < ca.rows.size(); ++r)
      for (std::size_t k = 0; k < ca.rows[r].size(); ++k)
        worst = std::max(worst, std::abs(ca.rows[r][k] - cb.rows[r][k]));
  }
  return worst;
}

}  // namespace qosbn::testing
