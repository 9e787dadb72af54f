#include "qosbn/learning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "qosbn/inference.hpp"

namespace qosbn {

void EmConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("EM needs at least one iteration");
  if (!(tolerance > 0.0)) throw std::invalid_argument("EM tolerance must be positive");
  if (!(pseudocount >= 0.0) || !std::isfinite(pseudocount))
    throw std::invalid_argument("pseudocount must be a finite non-negative number");
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

// Joint posteriors over the missing cells of a record are computed in one
// pass when they have at most this many configurations.
constexpr std::size_t kJointQueryLimit = std::size_t{1} << 16;
constexpr std::size_t kChunks = 16;

struct Pattern {
  std::vector<int> states;
  double weight = 0.0;
};

std::vector<Pattern> make_patterns(const BayesianNetwork& bn, const Dataset& data) {
  const auto binding = bind_columns(bn, data);
  std::map<std::vector<int>, double> counts;
  for (const auto& row : data.rows) counts[binding.translate(row)] += 1.0;
  std::vector<Pattern> out;
  out.reserve(counts.size());
  for (auto& [states, w] : counts) out.push_back({states, w});
  return out;
}

struct Neumaier {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Expected sufficient statistics. CPT counts are flat [row * card + state];
// noisy-MAX link counts are flat [parent_state * card + state] per parent.
struct Stats {
  std::vector<std::vector<double>> counts;
  std::vector<std::vector<std::vector<double>>> link;
  std::vector<std::vector<double>> leak;
  Neumaier ll;
  std::vector<std::size_t> zero_patterns;

  explicit Stats(const BayesianNetwork& bn)
      : counts(bn.size()), link(bn.size()), leak(bn.size()) {
    for (std::size_t v = 0; v < bn.size(); ++v) {
      const std::size_t c = bn.cardinality(v);
      if (bn.is_noisy_max(v)) {
        for (auto p : bn.parents(v)) link[v].emplace_back(bn.cardinality(p) * c, 0.0);
        leak[v].assign(c, 0.0);
      } else {
        std::size_t rows = 1;
        for (auto p : bn.parents(v)) rows *= bn.cardinality(p);
        counts[v].assign(rows * c, 0.0);
      }
    }
  }

  void merge(const Stats& o) {
    auto add = [](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    for (std::size_t v = 0; v < counts.size(); ++v) {
      add(counts[v], o.counts[v]);
      for (std::size_t p = 0; p < link[v].size(); ++p) add(link[v][p], o.link[v][p]);
      add(leak[v], o.leak[v]);
    }
    ll.add(o.ll.sum);
    ll.add(o.ll.comp);
    zero_patterns.insert(zero_patterns.end(), o.zero_patterns.begin(), o.zero_patterns.end());
  }
};

std::size_t family_row(const BayesianNetwork& bn, std::size_t v, const std::vector<std::size_t>& x) {
  std::size_t row = 0;
  for (auto p : bn.parents(v)) row = row * bn.cardinality(p) + x[p];
  return row;
}

void add_family(const BayesianNetwork& bn, std::size_t v, const std::vector<std::size_t>& x,
                double w, Stats& s) {
  const std::size_t c = bn.cardinality(v);
  const std::size_t y = x[v];
  if (!bn.is_noisy_max(v)) {
    s.counts[v][family_row(bn, v, x) * c + y] += w;
    return;
  }
  const auto& nm = std::get<NoisyMaxCpd>(bn.cpd(v));
  const auto& parents = bn.parents(v);
  const std::size_t n = parents.size() + 1;  // cause 0 is the leak
  auto vec = [&](std::size_t j) -> const std::vector<double>& {
    return j == 0 ? nm.leak : nm.link_params[j - 1][x[parents[j - 1]]];
  };
  std::vector<double> fy(n), fm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& d = vec(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < y; ++k) acc += d[k];
    fm[j] = acc;
    fy[j] = acc + d[y];
  }
  std::vector<double> pre_y(n + 1, 1.0), pre_m(n + 1, 1.0), suf_y(n + 1, 1.0), suf_m(n + 1, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    pre_y[j + 1] = pre_y[j] * fy[j];
    pre_m[j + 1] = pre_m[j] * fm[j];
  }
  for (std::size_t j = n; j-- > 0;) {
    suf_y[j] = suf_y[j + 1] * fy[j];
    suf_m[j] = suf_m[j + 1] * fm[j];
  }
  const double py = pre_y[n] - pre_m[n];
  if (!(py > 0.0)) return;
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0 && x[parents[j - 1]] == nm.off_states[j - 1]) continue;
    const double ex_y = pre_y[j] * suf_y[j + 1];
    const double ex_m = pre_m[j] * suf_m[j + 1];
    const auto& d = vec(j);
    double* target = j == 0 ? s.leak[v].data() : s.link[v][j - 1].data() + x[parents[j - 1]] * c;
    const double scale = w / py;
    for (std::size_t k = 0; k < y; ++k) target[k] += scale * d[k] * (ex_y - ex_m);
    target[y] += scale * d[y] * ex_y;
  }
}

// Iterates the configurations of a factor over `vars`, writing each into x.
template <typename F>
void for_each_config(const Factor& f, const std::vector<std::size_t>& vars,
                     std::vector<std::size_t>& x, F&& fn) {
  const auto& cards = f.cards();
  std::vector<std::size_t> idx(vars.size(), 0);
  for (std::size_t r = 0; r < f.size(); ++r) {
    for (std::size_t i = 0; i < vars.size(); ++i) x[vars[i]] = idx[i];
    fn(f.values()[r]);
    for (std::size_t i = vars.size(); i-- > 0;) {
      if (++idx[i] < cards[i]) break;
      idx[i] = 0;
    }
  }
}

void accumulate(const BayesianNetwork& bn, const InferenceEngine& eng, const Pattern& pat,
                std::size_t pattern_index, Stats& s) {
  const std::size_t n = bn.size();
  std::vector<std::size_t> x(n, 0), missing;
  IndexedEvidence e;
  for (std::size_t v = 0; v < n; ++v) {
    if (pat.states[v] == kMissing) {
      missing.push_back(v);
    } else {
      x[v] = static_cast<std::size_t>(pat.states[v]);
      e.hard[v] = x[v];
    }
  }
  const double w = pat.weight;
  if (missing.empty()) {
    const double p = joint_probability(bn, x);
    if (!(p > 0.0)) {
      s.zero_patterns.push_back(pattern_index);
      return;
    }
    s.ll.add(w * std::log(p));
    for (std::size_t v = 0; v < n; ++v) add_family(bn, v, x, w, s);
    return;
  }

  std::size_t configs = 1;
  for (auto v : missing) {
    configs *= bn.cardinality(v);
    if (configs > kJointQueryLimit) break;
  }
  if (configs <= kJointQueryLimit) {
    double pe = 0.0;
    Factor post;
    try {
      post = eng.marginal(e, missing, &pe);
    } catch (const ImpossibleEvidence&) {
      s.zero_patterns.push_back(pattern_index);
      return;
    }
    s.ll.add(w * std::log(pe));
    for_each_config(post, missing, x, [&](double p) {
      if (p == 0.0) return;
      for (std::size_t v = 0; v < n; ++v) add_family(bn, v, x, w * p, s);
    });
    return;
  }

  const double pe = eng.evidence_probability(e);
  if (!(pe > 0.0)) {
    s.zero_patterns.push_back(pattern_index);
    return;
  }
  s.ll.add(w * std::log(pe));
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> hidden;
    for (auto p : bn.parents(v))
      if (pat.states[p] == kMissing) hidden.push_back(p);
    if (pat.states[v] == kMissing) hidden.push_back(v);
    if (hidden.empty()) {
      add_family(bn, v, x, w, s);
      continue;
    }
    const Factor post = eng.marginal(e, hidden);
    for_each_config(post, hidden, x, [&](double p) {
      if (p != 0.0) add_family(bn, v, x, w * p, s);
    });
  }
}

Stats e_step(const BayesianNetwork& bn, const std::vector<Pattern>& patterns, std::size_t threads) {
  const InferenceEngine eng(bn);
  const std::size_t chunks = std::max<std::size_t>(1, std::min(kChunks, patterns.size()));
  std::vector<Stats> partial(chunks, Stats(bn));
  auto run_chunk = [&](std::size_t c) {
    const std::size_t lo = patterns.size() * c / chunks;
    const std::size_t hi = patterns.size() * (c + 1) / chunks;
    for (std::size_t i = lo; i < hi; ++i) accumulate(bn, eng, patterns[i], i, partial[c]);
  };
  if (threads <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, chunks); ++t)
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks;) run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }
  Stats total(bn);
  for (const auto& p : partial) total.merge(p);
  return total;
}

std::vector<double> normalize_counts(const double* counts, std::size_t card, double alpha) {
  std::vector<double> row(card);
  double total = 0.0;
  for (std::size_t k = 0; k < card; ++k) total += counts[k];
  const double denom = total + alpha * static_cast<double>(card);
  for (std::size_t k = 0; k < card; ++k)
    row[k] = denom > 0.0 ? (counts[k] + alpha) / denom : 1.0 / static_cast<double>(card);
  return row;
}

BayesianNetwork m_step(const BayesianNetwork& bn, const Stats& s, double alpha) {
  NetworkDefinition def = bn.definition();
  for (auto& cpd : def.cpds) {
    const std::size_t v = bn.index_of(cpd_child(cpd));
    const std::size_t c = bn.cardinality(v);
    if (auto* cpt = std::get_if<Cpt>(&cpd)) {
      for (std::size_t r = 0; r < cpt->rows.size(); ++r)
        cpt->rows[r] = normalize_counts(s.counts[v].data() + r * c, c, alpha);
    } else {
      auto& nm = std::get<NoisyMaxCpd>(cpd);
      nm.leak = normalize_counts(s.leak[v].data(), c, alpha);
      for (std::size_t p = 0; p < nm.parents.size(); ++p)
        for (std::size_t st = 0; st < nm.link_params[p].size(); ++st)
          if (st != nm.off_states[p])
            nm.link_params[p][st] = normalize_counts(s.link[v][p].data() + st * c, c, alpha);
    }
  }
  return BayesianNetwork(std::move(def));
}

double log_prior(const BayesianNetwork& bn, double alpha) {
  if (alpha == 0.0) return 0.0;
  Neumaier acc;
  auto add_row = [&](const std::vector<double>& row) {
    for (double p : row) acc.add(alpha * std::log(p));
  };
  for (const auto& cpd : bn.definition().cpds) {
    if (const auto* cpt = std::get_if<Cpt>(&cpd)) {
      for (const auto& row : cpt->rows) add_row(row);
    } else {
      const auto& nm = std::get<NoisyMaxCpd>(cpd);
      add_row(nm.leak);
      for (std::size_t p = 0; p < nm.parents.size(); ++p)
        for (std::size_t st = 0; st < nm.link_params[p].size(); ++st)
          if (st != nm.off_states[p]) add_row(nm.link_params[p][st]);
    }
  }
  return acc.value();
}

std::string describe_pattern(const BayesianNetwork& bn, const Pattern& pat) {
  std::string out = "{";
  bool first = true;
  for (std::size_t v = 0; v < bn.size(); ++v) {
    if (pat.states[v] == kMissing) continue;
    if (!first) out += ", ";
    first = false;
    out += bn.variable(v).id + "=" + bn.variable(v).states[static_cast<std::size_t>(pat.states[v])];
  }
  return out + "}";
}

[[noreturn]] void zero_likelihood(const BayesianNetwork& bn, const Pattern& pat) {
  std::string family;
  if (std::none_of(pat.states.begin(), pat.states.end(), [](int s) { return s == kMissing; })) {
    for (std::size_t v = 0; v < bn.size() && family.empty(); ++v) {
      std::vector<std::size_t> ps;
      for (auto p : bn.parents(v)) ps.push_back(static_cast<std::size_t>(pat.states[p]));
      if (bn.conditional(v, static_cast<std::size_t>(pat.states[v]), ps) == 0.0)
        family = bn.variable(v).id;
    }
  }
  throw LearningError("non-finite likelihood: record " + describe_pattern(bn, pat) +
                      " has probability zero" +
                      (family.empty() ? std::string() : " in family '" + family + "'"));
}

// Parent states in the order the family lists them, for rows that observe the
// whole family.
struct FamilyRow {
  std::vector<std::size_t> parents;
  std::size_t child;
  double weight;
};

std::vector<FamilyRow> complete_family_rows(const BayesianNetwork& bn, std::size_t v,
                                            const std::vector<Pattern>& patterns) {
  std::vector<FamilyRow> rows;
  for (const auto& pat : patterns) {
    if (pat.states[v] == kMissing) continue;
    FamilyRow r{{}, static_cast<std::size_t>(pat.states[v]), pat.weight};
    bool ok = true;
    for (auto p : bn.parents(v)) {
      if (pat.states[p] == kMissing) {
        ok = false;
        break;
      }
      r.parents.push_back(static_cast<std::size_t>(pat.states[p]));
    }
    if (ok) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<double> cumulative(const std::vector<double>& d) {
  std::vector<double> f(d.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) f[k] = (acc += d[k]);
  return f;
}

// Off states and starting link vectors for one noisy-MAX family.
void init_noisy_max(const BayesianNetwork& bn, std::size_t v, const std::vector<Pattern>& patterns,
                    NoisyMaxCpd& nm) {
  const std::size_t c = bn.cardinality(v);
  const auto& parents = bn.parents(v);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    std::vector<double> freq(bn.cardinality(parents[i]), 0.0);
    for (const auto& pat : patterns)
      if (pat.states[parents[i]] != kMissing)
        freq[static_cast<std::size_t>(pat.states[parents[i]])] += pat.weight;
    nm.off_states[i] = static_cast<std::size_t>(std::max_element(freq.begin(), freq.end()) - freq.begin());
  }

  const auto rows = complete_family_rows(bn, v, patterns);
  auto smoothed = [&](auto&& keep) -> std::optional<std::vector<double>> {
    std::vector<double> counts(c, 0.0);
    double total = 0.0;
    for (const auto& r : rows)
      if (keep(r)) {
        counts[r.child] += r.weight;
        total += r.weight;
      }
    if (total == 0.0) return std::nullopt;
    return normalize_counts(counts.data(), c, 1.0);
  };
  auto all_off_except = [&](const FamilyRow& r, std::size_t skip) {
    for (std::size_t j = 0; j < parents.size(); ++j)
      if (j != skip && r.parents[j] != nm.off_states[j]) return false;
    return true;
  };

  if (auto leak = smoothed([&](const FamilyRow& r) { return all_off_except(r, parents.size()); })) {
    nm.leak = *leak;
  } else {
    nm.leak.assign(c, c > 1 ? 0.1 / static_cast<double>(c - 1) : 1.0);
    nm.leak[0] = c > 1 ? 0.9 : 1.0;
  }
  const auto f_leak = cumulative(nm.leak);

  for (std::size_t i = 0; i < parents.size(); ++i) {
    for (std::size_t s = 0; s < nm.link_params[i].size(); ++s) {
      auto& link = nm.link_params[i][s];
      if (s == nm.off_states[i]) {
        link.assign(c, 0.0);
        link[0] = 1.0;
        continue;
      }
      auto emp = smoothed([&](const FamilyRow& r) { return r.parents[i] == s && all_off_except(r, i); });
      if (!emp) emp = smoothed([&](const FamilyRow& r) { return r.parents[i] == s; });
      if (!emp) {
        link.assign(c, 1.0 / static_cast<double>(c));
        continue;
      }
      const auto f_emp = cumulative(*emp);
      std::vector<double> f(c, 1.0);
      double floor = 0.0;
      for (std::size_t k = 0; k + 1 < c; ++k) {
        const double ratio = f_leak[k] > 0.0 ? f_emp[k] / f_leak[k] : 1.0;
        f[k] = floor = std::max(floor, std::clamp(ratio, 0.0, 1.0));
      }
      // Mix with uniform so no state starts at exactly zero.
      const double eps = 0.01;
      for (std::size_t k = 0; k < c; ++k)
        link[k] = (1.0 - eps) * (f[k] - (k ? f[k - 1] : 0.0)) + eps / static_cast<double>(c);
    }
  }
}

std::vector<double> dirichlet_one(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = -std::log(1.0 - unit_uniform(rng)) + 1e-12);
  for (auto& x : p) x /= s;
  return p;
}

BayesianNetwork random_parameters(const BayesianNetwork& bn, std::mt19937_64& rng) {
  NetworkDefinition def = bn.definition();
  for (auto& cpd : def.cpds) {
    if (auto* cpt = std::get_if<Cpt>(&cpd)) {
      for (auto& row : cpt->rows) row = dirichlet_one(row.size(), rng);
    } else {
      auto& nm = std::get<NoisyMaxCpd>(cpd);
      nm.leak = dirichlet_one(nm.leak.size(), rng);
      for (std::size_t p = 0; p < nm.parents.size(); ++p)
        for (std::size_t s = 0; s < nm.link_params[p].size(); ++s)
          if (s != nm.off_states[p]) nm.link_params[p][s] = dirichlet_one(nm.leak.size(), rng);
    }
  }
  return BayesianNetwork(std::move(def));
}

EmResult run_em(BayesianNetwork bn, const std::vector<Pattern>& patterns, const EmConfig& cfg) {
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;
  for (std::size_t it = 0;; ++it) {
    Stats s = e_step(bn, patterns, cfg.threads);
    if (!s.zero_patterns.empty())
      zero_likelihood(bn, patterns[*std::min_element(s.zero_patterns.begin(), s.zero_patterns.end())]);
    const double obj = s.ll.value() + log_prior(bn, cfg.pseudocount);
    if (!std::isfinite(obj)) throw LearningError("non-finite likelihood during EM");
    trace.push_back(obj);
    if (it > 0 && std::abs(obj - trace[it - 1]) < cfg.tolerance) {
      converged = true;
      break;
    }
    if (it == cfg.max_iterations) break;
    bn = m_step(bn, s, cfg.pseudocount);
    iterations = it + 1;
  }
  return EmResult{std::move(bn), std::move(trace), iterations, converged};
}

}  // namespace

BayesianNetwork uniform_parameters(const BayesianNetwork& bn) {
  NetworkDefinition def = bn.definition();
  for (auto& cpd : def.cpds) {
    if (auto* cpt = std::get_if<Cpt>(&cpd)) {
      for (auto& row : cpt->rows) row.assign(row.size(), 1.0 / static_cast<double>(row.size()));
    } else {
      auto& nm = std::get<NoisyMaxCpd>(cpd);
      const std::size_t c = nm.leak.size();
      nm.leak.assign(c, 1.0 / static_cast<double>(c));
      for (std::size_t p = 0; p < nm.parents.size(); ++p)
        for (std::size_t s = 0; s < nm.link_params[p].size(); ++s) {
          auto& link = nm.link_params[p][s];
          link.assign(c, s == nm.off_states[p] ? 0.0 : 1.0 / static_cast<double>(c));
          if (s == nm.off_states[p]) link[0] = 1.0;
        }
    }
  }
  return BayesianNetwork(std::move(def));
}

BayesianNetwork learn_mle(const BayesianNetwork& skeleton, const Dataset& data, double pseudocount) {
  if (!(pseudocount >= 0.0)) throw std::invalid_argument("pseudocount must be non-negative");
  for (std::size_t v = 0; v < skeleton.size(); ++v)
    if (skeleton.is_noisy_max(v))
      throw std::invalid_argument("learn_mle does not handle the noisy-MAX family of '" +
                                  skeleton.variable(v).id + "'; use learn_em");
  const auto patterns = make_patterns(skeleton, data);
  Stats s(skeleton);
  for (std::size_t v = 0; v < skeleton.size(); ++v) {
    const std::size_t c = skeleton.cardinality(v);
    for (const auto& r : complete_family_rows(skeleton, v, patterns)) {
      std::size_t row = 0;
      for (std::size_t i = 0; i < r.parents.size(); ++i)
        row = row * skeleton.cardinality(skeleton.parents(v)[i]) + r.parents[i];
      s.counts[v][row * c + r.child] += r.weight;
    }
  }
  return m_step(skeleton, s, pseudocount);
}

EmResult learn_em(const BayesianNetwork& skeleton, const Dataset& data, const EmConfig& cfg) {
  cfg.validate();
  const auto patterns = make_patterns(skeleton, data);
  for (std::size_t v = 0; v < skeleton.size(); ++v) {
    const bool seen = std::any_of(patterns.begin(), patterns.end(),
                                  [&](const Pattern& p) { return p.states[v] != kMissing; });
    if (!seen)
      throw DataError("variable '" + skeleton.variable(v).id + "' has no observed cell in the data");
  }

  NetworkDefinition def = uniform_parameters(skeleton).definition();
  for (auto& cpd : def.cpds)
    if (auto* nm = std::get_if<NoisyMaxCpd>(&cpd))
      init_noisy_max(skeleton, skeleton.index_of(nm->child), patterns, *nm);
  const BayesianNetwork start(std::move(def));

  EmResult best = run_em(start, patterns, cfg);
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    EmResult run = run_em(random_parameters(start, rng), patterns, cfg);
    if (run.trace.back() > best.trace.back()) best = std::move(run);
  }
  return best;
}

LikelihoodReport log_likelihood_report(const BayesianNetwork& bn, const Dataset& data) {
  const auto binding = bind_columns(bn, data);
  const InferenceEngine eng(bn);
  std::map<std::vector<int>, double> cache;
  LikelihoodReport report;
  Neumaier acc;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto states = binding.translate(data.rows[r]);
    auto it = cache.find(states);
    if (it == cache.end()) {
      IndexedEvidence e;
      for (std::size_t v = 0; v < states.size(); ++v)
        if (states[v] != kMissing) e.hard[v] = static_cast<std::size_t>(states[v]);
      double p;
      if (e.hard.size() == bn.size()) {
        std::vector<std::size_t> x(states.begin(), states.end());
        p = joint_probability(bn, x);
      } else {
        p = eng.evidence_probability(e);
      }
      it = cache.emplace(states, p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity()).first;
    }
    if (std::isinf(it->second))
      report.zero_rows.push_back(r);
    else
      acc.add(it->second);
  }
  report.value = report.zero_rows.empty() ? acc.value() : -std::numeric_limits<double>::infinity();
  return report;
}

double log_likelihood(const BayesianNetwork& bn, const Dataset& data) {
  return log_likelihood_report(bn, data).value;
}

Dataset sample_dataset(const BayesianNetwork& bn, std::size_t n, std::mt19937_64& rng) {
  Dataset ds;
  ds.variables = bn.variables();
  ds.rows.reserve(n);
  std::vector<std::size_t> x(bn.size());
  std::vector<std::size_t> ps;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto v : bn.topological_order()) {
      ps.clear();
      for (auto p : bn.parents(v)) ps.push_back(x[p]);
      const double u = unit_uniform(rng);
      double acc = 0.0;
      std::size_t pick = bn.cardinality(v) - 1;
      for (std::size_t k = 0; k < bn.cardinality(v); ++k) {
        acc += bn.conditional(v, k, ps);
        if (u < acc) {
          pick = k;
          break;
        }
      }
      x[v] = pick;
    }
    ds.rows.emplace_back(x.begin(), x.end());
  }
  return ds;
}

Dataset erase_cells(const Dataset& ds, double p, std::mt19937_64& rng) {
  Dataset out = ds;
  for (auto& row : out.rows)
    for (auto& cell : row)
      if (unit_uniform(rng) < p) cell = kMissing;
  return out;
}

}  // namespace qosbn
