#include "qosbn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qosbn {

std::string EvidenceSet::describe() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [var, state] : hard) {
    os << (first ? "" : ", ") << var << '=' << state;
    first = false;
  }
  for (const auto& [var, lik] : soft) {
    os << (first ? "" : ", ") << var << "~(";
    for (std::size_t i = 0; i < lik.size(); ++i) os << (i ? "," : "") << lik[i];
    os << ')';
    first = false;
  }
  os << '}';
  return os.str();
}

IndexedEvidence resolve_evidence(const BayesianNetwork& bn, const EvidenceSet& e) {
  IndexedEvidence out;
  for (const auto& [id, label] : e.hard) {
    auto idx = bn.find(id);
    if (!idx) throw InvalidEvidence("evidence names unknown variable '" + id + "'");
    auto s = bn.variable(*idx).state_index(label);
    if (!s) throw InvalidEvidence("unknown state '" + label + "' for variable '" + id + "'");
    out.hard[*idx] = *s;
  }
  for (const auto& [id, lik] : e.soft) {
    auto idx = bn.find(id);
    if (!idx) throw InvalidEvidence("evidence names unknown variable '" + id + "'");
    if (e.hard.count(id))
      throw InvalidEvidence("variable '" + id + "' has both hard and soft evidence");
    if (lik.size() != bn.cardinality(*idx))
      throw InvalidEvidence("likelihood for '" + id + "' has " + std::to_string(lik.size()) +
                            " entries, expected " + std::to_string(bn.cardinality(*idx)));
    bool positive = false;
    for (double v : lik) {
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidEvidence("likelihood for '" + id + "' must be finite and nonnegative");
      positive = positive || v > 0.0;
    }
    if (!positive) throw InvalidEvidence("likelihood for '" + id + "' is all zero");
    out.soft[*idx] = lik;
  }
  return out;
}

namespace {

// Cumulative distribution of a probability vector, pinned to 1 at the top.
std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) c[k] = std::min(acc += p[k], 1.0);
  c.back() = 1.0;
  return c;
}

Factor cpt_factor(const Cpt& cpt, std::size_t child, const std::vector<std::size_t>& parents,
                  const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> scope = parents;
  scope.push_back(child);
  std::vector<std::size_t> fc;
  for (auto v : scope) fc.push_back(cards[v]);
  std::vector<double> values;
  values.reserve(cpt.rows.size() * cards[child]);
  for (const auto& row : cpt.rows) values.insert(values.end(), row.begin(), row.end());
  return Factor(std::move(scope), std::move(fc), std::move(values));
}

}  // namespace

InferenceEngine::InferenceEngine(const BayesianNetwork& bn, InferenceOptions options)
    : bn_(&bn), options_(std::move(options)), cards_(bn.cardinalities()) {
  decomposed_.assign(bn.size(), false);
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const auto& parents = bn.parents(i);
    if (const auto* cpt = std::get_if<Cpt>(&bn.cpd(i))) {
      base_.push_back(cpt_factor(*cpt, i, parents, cards_));
      continue;
    }
    const auto& nm = std::get<NoisyMaxCpd>(bn.cpd(i));
    std::size_t table = cards_[i];
    bool fits = true;
    for (auto p : parents) {
      if (table > options_.noisy_max_table_limit / cards_[p]) {
        fits = false;
        break;
      }
      table *= cards_[p];
    }
    if (fits && table <= options_.noisy_max_table_limit) {
      base_.push_back(cpt_factor(expand_noisy_max(nm), i, parents, cards_));
      continue;
    }
    // P(c | x) = sum_a g(c, a) * leak_cdf(a) * prod_p cdf_p(a | x_p), where the
    // auxiliary a ranges over child states and g(c, a) = [a == c] - [a == c - 1].
    decomposed_[i] = true;
    signed_ = true;
    const std::size_t m = cards_[i];
    const std::size_t aux = cards_.size();
    cards_.push_back(m);
    aux_names_.push_back("~threshold:" + bn.variable(i).id);

    const auto leak_cdf = cumulative(nm.leak);
    std::vector<double> g(m * m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      g[c * m + c] = leak_cdf[c];
      if (c > 0) g[c * m + c - 1] = -leak_cdf[c - 1];
    }
    base_.emplace_back(std::vector<std::size_t>{i, aux}, std::vector<std::size_t>{m, m},
                       std::move(g));
    for (std::size_t p = 0; p < parents.size(); ++p) {
      std::vector<double> h;
      for (const auto& link : nm.link_params[p]) {
        auto cdf = cumulative(link);
        h.insert(h.end(), cdf.begin(), cdf.end());
      }
      base_.emplace_back(std::vector<std::size_t>{parents[p], aux},
                         std::vector<std::size_t>{cards_[parents[p]], m}, std::move(h));
    }
  }
}

bool InferenceEngine::uses_decomposition(std::size_t node) const { return decomposed_.at(node); }

const std::string& InferenceEngine::name_of(std::size_t var) const {
  if (var < bn_->size()) return bn_->variable(var).id;
  return aux_names_[var - bn_->size()];
}

struct InferenceEngine::Reduced {
  Factor factor;
};

InferenceEngine::Reduced InferenceEngine::eliminate(const IndexedEvidence& e,
                                                    const std::vector<std::size_t>& keep,
                                                    std::vector<std::string>* order_out) const {
  std::vector<Factor> factors;
  factors.reserve(base_.size() + e.soft.size());
  IndexedEvidence hard_only;
  hard_only.hard = e.hard;
  for (const auto& f : base_) factors.push_back(apply_evidence(f, hard_only));
  for (const auto& [var, lik] : e.soft) {
    if (e.hard.count(var)) continue;
    factors.emplace_back(std::vector<std::size_t>{var}, std::vector<std::size_t>{cards_[var]}, lik);
  }

  std::set<std::size_t> keep_set(keep.begin(), keep.end());
  std::set<std::size_t> pending;
  for (const auto& f : factors)
    for (auto v : f.scope())
      if (!keep_set.count(v)) pending.insert(v);

  auto eliminate_var = [&](std::size_t v) {
    std::vector<Factor> rest;
    Factor prod;
    bool any = false;
    for (auto& f : factors) {
      if (f.contains(v)) {
        prod = any ? factor_multiply(prod, f) : std::move(f);
        any = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (any) rest.push_back(factor_marginalize(prod, v));
    factors = std::move(rest);
    pending.erase(v);
    if (order_out) order_out->push_back(name_of(v));
  };

  if (options_.elimination_order) {
    for (const auto& id : *options_.elimination_order) {
      auto idx = bn_->find(id);
      if (idx && pending.count(*idx)) eliminate_var(*idx);
    }
  }

  while (!pending.empty()) {
    // Min-fill on the current interaction graph; ties by variable id.
    std::map<std::size_t, std::set<std::size_t>> adj;
    for (const auto& f : factors)
      for (auto a : f.scope())
        for (auto b : f.scope())
          if (a != b) adj[a].insert(b);
    std::size_t best = *pending.begin();
    std::size_t best_fill = static_cast<std::size_t>(-1);
    for (auto v : pending) {
      const auto& nb = adj[v];
      std::size_t fill = 0;
      for (auto it = nb.begin(); it != nb.end(); ++it)
        for (auto jt = std::next(it); jt != nb.end(); ++jt)
          if (!adj[*it].count(*jt)) ++fill;
      if (fill < best_fill || (fill == best_fill && name_of(v) < name_of(best))) {
        best = v;
        best_fill = fill;
      }
    }
    eliminate_var(best);
  }

  Factor result = Factor::scalar(1.0);
  for (const auto& f : factors) result = factor_multiply(result, f);
  return {std::move(result)};
}

namespace {

// Below this the decomposed (signed) path is indistinguishable from zero.
constexpr double kSignedZero = 1e-13;

}  // namespace

Factor InferenceEngine::marginal(const IndexedEvidence& e, const std::vector<std::size_t>& query,
                                 double* evidence_probability) const {
  std::vector<std::size_t> free;
  for (auto q : query)
    if (!e.hard.count(q)) free.push_back(q);

  Factor r = eliminate(e, free, nullptr).factor;
  // Free query variables always appear in their own family factor.
  r = factor_permute(r, free);
  if (signed_)
    for (double& v : r.values()) v = std::max(v, 0.0);
  const double z = r.sum();
  const bool impossible = signed_ ? !(z > kSignedZero) : !(z > 0.0);
  if (evidence_probability) *evidence_probability = impossible ? 0.0 : z;
  if (impossible) {
    EvidenceSet named;
    for (const auto& [v, s] : e.hard) named.hard[name_of(v)] = bn_->variable(v).states[s];
    for (const auto& [v, l] : e.soft) named.soft[name_of(v)] = l;
    throw ImpossibleEvidence(named.describe());
  }
  factor_normalize(r);

  for (auto q : query) {
    auto it = e.hard.find(q);
    if (it == e.hard.end()) continue;
    std::vector<double> indicator(cards_[q], 0.0);
    indicator[it->second] = 1.0;
    r = factor_multiply(r, Factor({q}, {cards_[q]}, std::move(indicator)));
  }
  return factor_permute(r, query);
}

double InferenceEngine::evidence_probability(const IndexedEvidence& e) const {
  Factor r = eliminate(e, {}, nullptr).factor;
  const double z = r.values()[0];
  if (signed_) return z > kSignedZero ? z : 0.0;
  return std::max(z, 0.0);
}

std::vector<std::string> InferenceEngine::elimination_order(
    const IndexedEvidence& e, const std::vector<std::size_t>& query) const {
  std::vector<std::string> order;
  eliminate(e, query, &order);
  return order;
}

Posterior InferenceEngine::posterior(const EvidenceSet& e, const std::string& query) const {
  const auto q = bn_->find(query);
  if (!q) throw InvalidEvidence("unknown query variable '" + query + "'");
  const auto indexed = resolve_evidence(*bn_, e);
  double pe = 0.0;
  Factor m = marginal(indexed, {*q}, &pe);
  return Posterior{query, bn_->variable(*q).states, m.values(), pe};
}

Posterior posterior(const BayesianNetwork& bn, const EvidenceSet& e, const std::string& query,
                    const InferenceOptions& options) {
  return InferenceEngine(bn, options).posterior(e, query);
}

std::size_t argmax_lowest(const std::vector<double>& distribution) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i)
    if (distribution[i] > distribution[best]) best = i;
  return best;
}

std::string map_state(const BayesianNetwork& bn, const EvidenceSet& e, const std::string& query,
                      const InferenceOptions& options) {
  const auto p = posterior(bn, e, query, options);
  return p.states[argmax_lowest(p.distribution)];
}

JointTable enumerate_joint(const BayesianNetwork& bn, const EvidenceSet& e, std::size_t limit) {
  const auto indexed = resolve_evidence(bn, e);
  const auto& cards = bn.cardinalities();
  std::size_t total = 1;
  for (auto c : cards) {
    if (total > limit / c)
      throw StateSpaceTooLarge("joint state space exceeds enumeration limit " +
                               std::to_string(limit));
    total *= c;
  }

  // Family tables straight from the chain-rule conditionals.
  const std::size_t n = bn.size();
  std::vector<std::vector<double>> family(n);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = bn.parents(i);
    members[i].push_back(i);
    std::vector<std::size_t> fc;
    for (auto v : members[i]) fc.push_back(cards[v]);
    const std::size_t size = configuration_count(fc);
    family[i].resize(size);
    for (std::size_t r = 0; r < size; ++r) {
      auto states = mixed_radix_decode(r, fc);
      const std::size_t child_state = states.back();
      states.pop_back();
      family[i][r] = bn.conditional(i, child_state, states);
    }
  }

  std::vector<std::vector<double>> evidence_weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    evidence_weight[i].assign(cards[i], 1.0);
    if (auto it = indexed.hard.find(i); it != indexed.hard.end()) {
      std::fill(evidence_weight[i].begin(), evidence_weight[i].end(), 0.0);
      evidence_weight[i][it->second] = 1.0;
    } else if (auto st = indexed.soft.find(i); st != indexed.soft.end()) {
      evidence_weight[i] = st->second;
    }
  }

  std::vector<std::size_t> scope(n);
  for (std::size_t i = 0; i < n; ++i) scope[i] = i;
  std::vector<double> values(total);
  std::vector<std::size_t> states(n, 0);
  for (std::size_t r = 0; r < total; ++r) {
    double p = 1.0;
    for (std::size_t i = 0; i < n && p != 0.0; ++i) {
      std::size_t idx = 0;
      for (auto v : members[i]) idx = idx * cards[v] + states[v];
      p *= family[i][idx] * evidence_weight[i][states[i]];
    }
    values[r] = p;
    for (std::size_t d = n; d-- > 0;) {
      if (++states[d] < cards[d]) break;
      states[d] = 0;
    }
  }

  JointTable out{Factor(scope, cards, std::move(values)), 0.0, false};
  out.evidence_probability = out.table.sum();
  out.impossible = !(out.evidence_probability > 0.0);
  return out;
}

Posterior posterior_from_joint(const BayesianNetwork& bn, const JointTable& joint,
                               const std::string& query) {
  const std::size_t q = bn.index_of(query);
  if (joint.impossible) throw ImpossibleEvidence("(enumerated joint is all zero)");
  Factor m = joint.table;
  for (std::size_t v = bn.size(); v-- > 0;)
    if (v != q) m = factor_marginalize(m, v);
  factor_normalize(m);
  return Posterior{query, bn.variable(q).states, m.values(), joint.evidence_probability};
}

}  // namespace qosbn
