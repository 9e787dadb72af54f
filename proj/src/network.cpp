#include "qosbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace qosbn {

std::optional<std::size_t> Variable::state_index(const std::string& label) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == label) return i;
  return std::nullopt;
}

const std::string& cpd_child(const Cpd& cpd) {
  return std::visit([](const auto& c) -> const std::string& { return c.child; }, cpd);
}

const std::vector<std::string>& cpd_parents(const Cpd& cpd) {
  return std::visit([](const auto& c) -> const std::vector<std::string>& { return c.parents; },
                    cpd);
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].node << ": " << violations[i].message;
  }
  return os.str();
}

InvalidNetwork::InvalidNetwork(ValidationReport report)
    : std::runtime_error("invalid network: " + report.to_string()), report_(std::move(report)) {}

std::size_t configuration_count(const std::vector<std::size_t>& cards) {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

std::size_t mixed_radix_index(const std::vector<std::size_t>& states,
                              const std::vector<std::size_t>& cards) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i) idx = idx * cards[i] + states[i];
  return idx;
}

std::vector<std::size_t> mixed_radix_decode(std::size_t index,
                                            const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> states(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    states[i] = index % cards[i];
    index /= cards[i];
  }
  return states;
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void check_distribution(const std::vector<double>& row, std::size_t expected_len,
                        const std::string& node, const std::string& what,
                        std::vector<Violation>& out) {
  if (row.size() != expected_len) {
    out.push_back({node, "row-length",
                   what + " has " + std::to_string(row.size()) + " entries, expected " +
                       std::to_string(expected_len)});
    return;
  }
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      out.push_back({node, "entry-range", what + " entry " + format_number(p) + " outside [0,1]"});
      return;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance)
    out.push_back({node, "row-sum", what + " row sum " + format_number(sum) + " ≠ 1"});
}

// Returns the nodes of one directed cycle reachable in the parent graph, or
// empty when acyclic.
std::vector<std::string> find_cycle(const std::vector<std::string>& order,
                                    const std::map<std::string, std::vector<std::string>>& parents) {
  enum class Mark { none, active, done };
  std::map<std::string, Mark> mark;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;

  std::function<bool(const std::string&)> visit = [&](const std::string& n) -> bool {
    mark[n] = Mark::active;
    stack.push_back(n);
    if (auto it = parents.find(n); it != parents.end()) {
      for (const auto& p : it->second) {
        if (!mark.count(p) && !parents.count(p)) continue;
        if (mark[p] == Mark::active) {
          auto start = std::find(stack.begin(), stack.end(), p);
          cycle.assign(start, stack.end());
          return true;
        }
        if (mark[p] == Mark::none && visit(p)) return true;
      }
    }
    stack.pop_back();
    mark[n] = Mark::done;
    return false;
  };

  for (const auto& n : order) {
    if (mark[n] == Mark::none && visit(n)) break;
  }
  if (cycle.empty()) return cycle;
  // Report in declaration order so the message is stable.
  std::vector<std::string> sorted;
  for (const auto& n : order)
    if (std::find(cycle.begin(), cycle.end(), n) != cycle.end()) sorted.push_back(n);
  return sorted;
}

}  // namespace

ValidationReport validate_network(const NetworkDefinition& def) {
  std::vector<Violation> out;
  std::map<std::string, const Variable*> vars;
  std::vector<std::string> order;

  for (const auto& v : def.variables) {
    if (v.id.empty()) out.push_back({"<unnamed>", "variable-id", "variable with empty id"});
    if (vars.count(v.id)) {
      out.push_back({v.id, "duplicate-variable", "variable id declared twice"});
      continue;
    }
    vars[v.id] = &v;
    order.push_back(v.id);
    if (v.states.empty()) out.push_back({v.id, "cardinality", "variable has no states"});
    std::set<std::string> seen;
    for (const auto& s : v.states)
      if (!seen.insert(s).second)
        out.push_back({v.id, "duplicate-state", "state label '" + s + "' repeated"});
  }

  for (const auto& [child, parents] : def.parent_map) {
    if (!vars.count(child)) {
      out.push_back({child, "undeclared-node", "edge target is not a declared variable"});
      continue;
    }
    std::set<std::string> seen;
    for (const auto& p : parents) {
      if (!vars.count(p))
        out.push_back({child, "undeclared-parent", "parent '" + p + "' is not declared"});
      if (!seen.insert(p).second)
        out.push_back({child, "duplicate-parent", "parent '" + p + "' listed twice"});
    }
  }

  if (auto cycle = find_cycle(order, def.parent_map); !cycle.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < cycle.size(); ++i) joined += (i ? "," : "") + cycle[i];
    out.push_back({cycle.front(), "cycle", "cycle: " + joined});
  }

  std::map<std::string, int> cpd_count;
  for (const auto& cpd : def.cpds) {
    const auto& child = cpd_child(cpd);
    cpd_count[child]++;
    auto vit = vars.find(child);
    if (vit == vars.end()) {
      out.push_back({child, "undeclared-node", "distribution for undeclared variable"});
      continue;
    }
    const Variable& cv = *vit->second;
    static const std::vector<std::string> kNoParents;
    auto pit = def.parent_map.find(child);
    const auto& dag_parents = pit == def.parent_map.end() ? kNoParents : pit->second;
    const auto& parents = cpd_parents(cpd);
    if (parents != dag_parents) {
      out.push_back({child, "parent-mismatch",
                     "distribution parents differ from graph parents (order matters)"});
      continue;
    }
    std::vector<std::size_t> pcards;
    bool parents_ok = true;
    for (const auto& p : parents) {
      auto it = vars.find(p);
      if (it == vars.end()) {
        parents_ok = false;
        break;
      }
      pcards.push_back(it->second->cardinality());
    }
    if (!parents_ok) continue;

    if (const auto* cpt = std::get_if<Cpt>(&cpd)) {
      const std::size_t rows = configuration_count(pcards);
      if (cpt->rows.size() != rows) {
        out.push_back({child, "row-count",
                       "table has " + std::to_string(cpt->rows.size()) + " rows, expected " +
                           std::to_string(rows)});
        continue;
      }
      for (std::size_t r = 0; r < rows; ++r)
        check_distribution(cpt->rows[r], cv.cardinality(), child, "row " + std::to_string(r), out);
    } else {
      const auto& nm = std::get<NoisyMaxCpd>(cpd);
      check_distribution(nm.leak, cv.cardinality(), child, "leak", out);
      if (nm.link_params.size() != parents.size() || nm.off_states.size() != parents.size()) {
        out.push_back({child, "link-count", "need one link table and off state per parent"});
        continue;
      }
      for (std::size_t p = 0; p < parents.size(); ++p) {
        const auto& table = nm.link_params[p];
        if (table.size() != pcards[p]) {
          out.push_back({child, "link-count",
                         "link table for '" + parents[p] + "' has wrong number of states"});
          continue;
        }
        for (std::size_t s = 0; s < table.size(); ++s)
          check_distribution(table[s], cv.cardinality(), child,
                             "link " + parents[p] + "=" + std::to_string(s), out);
        const std::size_t off = nm.off_states[p];
        if (off >= pcards[p]) {
          out.push_back({child, "off-state", "off state out of range for '" + parents[p] + "'"});
        } else if (table[off].size() == cv.cardinality()) {
          for (std::size_t k = 0; k < table[off].size(); ++k) {
            if (table[off][k] != (k == 0 ? 1.0 : 0.0)) {
              out.push_back({child, "off-state",
                             "off state of '" + parents[p] + "' is not the degenerate vector"});
              break;
            }
          }
        }
      }
    }
  }
  for (const auto& id : order) {
    const int n = cpd_count.count(id) ? cpd_count[id] : 0;
    if (n != 1)
      out.push_back({id, "cpd-count",
                     "node has " + std::to_string(n) + " distributions, expected exactly 1"});
  }
  return {std::move(out)};
}

BayesianNetwork::BayesianNetwork(NetworkDefinition def) : def_(std::move(def)) {
  auto report = validate_network(def_);
  if (!report.ok()) throw InvalidNetwork(std::move(report));

  const std::size_t n = def_.variables.size();
  for (std::size_t i = 0; i < n; ++i) {
    index_[def_.variables[i].id] = i;
    cards_.push_back(def_.variables[i].cardinality());
  }
  parents_.resize(n);
  cpd_of_.resize(n);
  for (std::size_t c = 0; c < def_.cpds.size(); ++c) {
    const std::size_t node = index_.at(cpd_child(def_.cpds[c]));
    cpd_of_[node] = c;
    for (const auto& p : cpd_parents(def_.cpds[c])) parents_[node].push_back(index_.at(p));
  }

  // Kahn's algorithm, always taking the lowest declared index that is ready.
  std::vector<std::size_t> pending(n);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = parents_[i].size();
    for (auto p : parents_[i]) children[p].push_back(i);
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] == 0) ready.insert(i);
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (auto c : children[v])
      if (--pending[c] == 0) ready.insert(c);
  }
}

std::optional<std::size_t> BayesianNetwork::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t BayesianNetwork::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown variable '" + id + "'");
  return it->second;
}

bool BayesianNetwork::is_noisy_max(std::size_t i) const {
  return std::holds_alternative<NoisyMaxCpd>(cpd(i));
}

namespace {

double noisy_max_conditional(const NoisyMaxCpd& nm, std::size_t k,
                             const std::vector<std::size_t>& parent_states) {
  auto cumulative = [&](std::size_t upto) {
    double leak = 0.0;
    for (std::size_t j = 0; j <= upto; ++j) leak += nm.leak[j];
    double prod = std::min(leak, 1.0);
    for (std::size_t p = 0; p < parent_states.size(); ++p) {
      const auto& link = nm.link_params[p][parent_states[p]];
      double c = 0.0;
      for (std::size_t j = 0; j <= upto; ++j) c += link[j];
      prod *= std::min(c, 1.0);
    }
    return prod;
  };
  const double upper = cumulative(k);
  const double lower = k == 0 ? 0.0 : cumulative(k - 1);
  return std::max(0.0, upper - lower);
}

}  // namespace

double BayesianNetwork::conditional(std::size_t node, std::size_t child_state,
                                    const std::vector<std::size_t>& parent_states) const {
  const Cpd& c = cpd(node);
  if (const auto* cpt = std::get_if<Cpt>(&c)) {
    std::vector<std::size_t> pc;
    pc.reserve(parents_[node].size());
    for (auto p : parents_[node]) pc.push_back(cards_[p]);
    return cpt->rows[mixed_radix_index(parent_states, pc)][child_state];
  }
  return noisy_max_conditional(std::get<NoisyMaxCpd>(c), child_state, parent_states);
}

double joint_probability(const BayesianNetwork& bn, const std::vector<std::size_t>& states) {
  if (states.size() != bn.size())
    throw std::invalid_argument("assignment must cover every node");
  double log_sum = 0.0;
  std::vector<std::size_t> ps;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (states[i] >= bn.cardinality(i))
      throw std::invalid_argument("state index out of range for '" + bn.variable(i).id + "'");
    ps.clear();
    for (auto p : bn.parents(i)) ps.push_back(states[p]);
    const double p = bn.conditional(i, states[i], ps);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  return std::exp(log_sum);
}

double joint_probability(const BayesianNetwork& bn, const Assignment& assignment) {
  std::vector<std::size_t> states(bn.size());
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const auto& v = bn.variable(i);
    auto it = assignment.find(v.id);
    if (it == assignment.end()) throw std::invalid_argument("assignment is missing node '" + v.id + "'");
    auto s = v.state_index(it->second);
    if (!s)
      throw std::invalid_argument("unknown state '" + it->second + "' for node '" + v.id + "'");
    states[i] = *s;
  }
  for (const auto& [id, label] : assignment)
    if (!bn.find(id)) throw std::invalid_argument("assignment names unknown node '" + id + "'");
  return joint_probability(bn, states);
}

Cpt expand_noisy_max(const NoisyMaxCpd& cpd) {
  std::vector<std::size_t> pcards;
  for (const auto& table : cpd.link_params) pcards.push_back(table.size());
  const std::size_t m = cpd.leak.size();
  const std::size_t rows = configuration_count(pcards);

  std::vector<double> leak_cum(m);
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) leak_cum[k] = std::min(acc += cpd.leak[k], 1.0);
  leak_cum[m - 1] = 1.0;

  // Cumulative link vectors per parent state.
  std::vector<std::vector<std::vector<double>>> cum(cpd.link_params.size());
  for (std::size_t p = 0; p < cpd.link_params.size(); ++p) {
    for (const auto& link : cpd.link_params[p]) {
      std::vector<double> c(m);
      double a = 0.0;
      for (std::size_t k = 0; k < m; ++k) c[k] = std::min(a += link[k], 1.0);
      c[m - 1] = 1.0;
      cum[p].push_back(std::move(c));
    }
  }

  Cpt out{cpd.child, cpd.parents, std::vector<std::vector<double>>(rows, std::vector<double>(m))};
  std::vector<double> f(m);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto states = mixed_radix_decode(r, pcards);
    f = leak_cum;
    for (std::size_t p = 0; p < states.size(); ++p)
      for (std::size_t k = 0; k < m; ++k) f[k] *= cum[p][states[p]][k];
    auto& row = out.rows[r];
    for (std::size_t k = 0; k < m; ++k) row[k] = std::max(0.0, f[k] - (k ? f[k - 1] : 0.0));
  }
  return out;
}

}  // namespace qosbn
