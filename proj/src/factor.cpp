#include "qosbn/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace qosbn {

namespace {

std::size_t product(const std::vector<std::size_t>& cards) {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> s(cards.size());
  std::size_t acc = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    s[i] = acc;
    acc *= cards[i];
  }
  return s;
}

}  // namespace

Factor::Factor(std::vector<std::size_t> scope, std::vector<std::size_t> cards,
               std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
  if (scope_.size() != cards_.size())
    throw std::invalid_argument("factor scope and cardinalities differ in length");
  if (std::set<std::size_t>(scope_.begin(), scope_.end()).size() != scope_.size())
    throw std::invalid_argument("factor scope has duplicate variables");
  if (values_.size() != product(cards_))
    throw std::invalid_argument("factor value count " + std::to_string(values_.size()) +
                                " does not match scope size " + std::to_string(product(cards_)));
}

Factor Factor::scalar(double v) { return Factor({}, {}, {v}); }

Factor Factor::ones(std::vector<std::size_t> scope, std::vector<std::size_t> cards) {
  const std::size_t n = product(cards);
  return Factor(std::move(scope), std::move(cards), std::vector<double>(n, 1.0));
}

bool Factor::contains(std::size_t var) const {
  return std::find(scope_.begin(), scope_.end(), var) != scope_.end();
}

std::size_t Factor::position(std::size_t var) const {
  auto it = std::find(scope_.begin(), scope_.end(), var);
  if (it == scope_.end())
    throw std::invalid_argument("variable " + std::to_string(var) + " not in factor scope");
  return static_cast<std::size_t>(it - scope_.begin());
}

double Factor::at(std::span<const std::size_t> states) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards_.size(); ++i) idx = idx * cards_[i] + states[i];
  return values_[idx];
}

double Factor::sum() const {
  // Neumaier summation keeps totals independent of table size effects.
  double s = 0.0, c = 0.0;
  for (double v : values_) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  return s + c;
}

Factor factor_multiply(const Factor& a, const Factor& b) {
  std::vector<std::size_t> scope = a.scope();
  std::vector<std::size_t> cards = a.cards();
  for (std::size_t i = 0; i < b.scope().size(); ++i) {
    const auto v = b.scope()[i];
    auto it = std::find(scope.begin(), scope.end(), v);
    if (it == scope.end()) {
      scope.push_back(v);
      cards.push_back(b.cards()[i]);
    } else if (cards[static_cast<std::size_t>(it - scope.begin())] != b.cards()[i]) {
      throw std::invalid_argument("cardinality mismatch for shared variable " + std::to_string(v));
    }
  }

  // Per result position, the stride into a and b (0 when absent).
  const auto sa = strides_of(a.cards());
  const auto sb = strides_of(b.cards());
  std::vector<std::size_t> step_a(scope.size(), 0), step_b(scope.size(), 0);
  for (std::size_t i = 0; i < scope.size(); ++i) {
    for (std::size_t j = 0; j < a.scope().size(); ++j)
      if (a.scope()[j] == scope[i]) step_a[i] = sa[j];
    for (std::size_t j = 0; j < b.scope().size(); ++j)
      if (b.scope()[j] == scope[i]) step_b[i] = sb[j];
  }

  const std::size_t n = product(cards);
  std::vector<double> out(n);
  std::vector<std::size_t> counter(scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  const auto& va = a.values();
  const auto& vb = b.values();
  for (std::size_t r = 0; r < n; ++r) {
    out[r] = va[ia] * vb[ib];
    for (std::size_t d = scope.size(); d-- > 0;) {
      if (++counter[d] < cards[d]) {
        ia += step_a[d];
        ib += step_b[d];
        break;
      }
      counter[d] = 0;
      ia -= step_a[d] * (cards[d] - 1);
      ib -= step_b[d] * (cards[d] - 1);
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_marginalize(const Factor& f, std::size_t v) {
  const std::size_t pos = f.position(v);
  std::vector<std::size_t> scope = f.scope(), cards = f.cards();
  const std::size_t card = cards[pos];
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(pos));

  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.cards().size(); ++i) inner *= f.cards()[i];
  const std::size_t outer = f.size() / (inner * card);

  std::vector<double> out(outer * inner, 0.0);
  const auto& vals = f.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < card; ++s)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += vals[(o * card + s) * inner + i];
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_reduce(const Factor& f, std::size_t v, std::size_t state) {
  const std::size_t pos = f.position(v);
  std::vector<std::size_t> scope = f.scope(), cards = f.cards();
  const std::size_t card = cards[pos];
  if (state >= card) throw std::invalid_argument("evidence state out of range");
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(pos));

  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.cards().size(); ++i) inner *= f.cards()[i];
  const std::size_t outer = f.size() / (inner * card);

  std::vector<double> out(outer * inner);
  const auto& vals = f.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = vals[(o * card + state) * inner + i];
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_permute(const Factor& f, const std::vector<std::size_t>& new_scope) {
  if (new_scope.size() != f.scope().size())
    throw std::invalid_argument("permutation must cover the whole scope");
  std::vector<std::size_t> cards(new_scope.size());
  std::vector<std::size_t> src_pos(new_scope.size());
  for (std::size_t i = 0; i < new_scope.size(); ++i) {
    src_pos[i] = f.position(new_scope[i]);
    cards[i] = f.cards()[src_pos[i]];
  }
  const auto src_strides = strides_of(f.cards());
  std::vector<double> out(f.size());
  std::vector<std::size_t> counter(new_scope.size(), 0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < counter.size(); ++i) src += counter[i] * src_strides[src_pos[i]];
    out[r] = f.values()[src];
    for (std::size_t d = counter.size(); d-- > 0;) {
      if (++counter[d] < cards[d]) break;
      counter[d] = 0;
    }
  }
  return Factor(new_scope, std::move(cards), std::move(out));
}

double factor_normalize(Factor& f) {
  const double z = f.sum();
  if (z != 0.0)
    for (double& v : f.values()) v /= z;
  return z;
}

Factor apply_evidence(const Factor& f, const IndexedEvidence& e, HardEvidenceMode mode) {
  Factor out = f;
  for (const auto& [var, state] : e.hard) {
    if (!out.contains(var)) continue;
    if (mode == HardEvidenceMode::slice) {
      out = factor_reduce(out, var, state);
    } else {
      std::vector<double> indicator(out.cardinality_of(var), 0.0);
      indicator.at(state) = 1.0;
      out = factor_permute(factor_multiply(out, Factor({var}, {indicator.size()}, indicator)),
                           out.scope());
    }
  }
  for (const auto& [var, likelihood] : e.soft) {
    if (!out.contains(var)) continue;
    if (likelihood.size() != out.cardinality_of(var))
      throw std::invalid_argument("likelihood length does not match cardinality");
    out = factor_permute(factor_multiply(out, Factor({var}, {likelihood.size()}, likelihood)),
                         out.scope());
  }
  return out;
}

}  // namespace qosbn
