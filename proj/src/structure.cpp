#include "qosbn/structure.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>

#include "qosbn/ingestion.hpp"

namespace qosbn {

using nlohmann::json;

std::string to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::tan: return "tan";
    case StructureKind::nor: return "nor";
    case StructureKind::cbn: return "cbn";
    default: return "nbn";
  }
}

StructureKind structure_kind_from_string(const std::string& s) {
  std::string l = s;
  for (auto& c : l) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l == "nbn") return StructureKind::nbn;
  if (l == "tan") return StructureKind::tan;
  if (l == "nor") return StructureKind::nor;
  if (l == "cbn") return StructureKind::cbn;
  throw std::invalid_argument("unknown structure kind '" + s + "' (expected nbn, tan, nor or cbn)");
}

json structure_to_json(const StructureSpec& spec) {
  json j{{"kind", to_string(spec.kind)}, {"class", spec.class_variable}, {"features", spec.features}};
  if (spec.cbn_edges) {
    json edges = json::array();
    for (const auto& e : *spec.cbn_edges) edges.push_back({{"parent", e.parent}, {"child", e.child}});
    j["cbn_edges"] = edges;
  }
  return j;
}

StructureSpec structure_from_json(const json& j) {
  StructureSpec spec;
  try {
    spec.kind = structure_kind_from_string(j.at("kind").get<std::string>());
    spec.class_variable = j.value("class", spec.class_variable);
    if (j.contains("features")) spec.features = j["features"].get<std::vector<std::string>>();
    if (j.contains("cbn_edges")) {
      std::vector<Edge> edges;
      for (const auto& e : j["cbn_edges"])
        edges.push_back({e.at("parent").get<std::string>(), e.at("child").get<std::string>()});
      spec.cbn_edges = std::move(edges);
    }
  } catch (const json::exception& e) {
    throw StructureError(std::string("malformed structure spec: ") + e.what());
  }
  if (spec.kind == StructureKind::cbn && !spec.cbn_edges)
    throw StructureError("a cbn structure needs cbn_edges");
  return spec;
}

StructureSpec load_structure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructureError("cannot read structure file " + path.string());
  try {
    return structure_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw StructureError(path.string() + ": " + e.what());
  }
}

namespace {

const Variable& schema_var(const std::vector<Variable>& schema, const std::string& id,
                           const std::string& role) {
  for (const auto& v : schema)
    if (v.id == id) return v;
  throw StructureError(role + " '" + id + "' is not in the schema");
}

BayesianNetwork make_skeleton(const std::vector<Variable>& vars,
                              const std::map<std::string, std::vector<std::string>>& parents,
                              const std::string* noisy_child) {
  NetworkDefinition def;
  def.variables = vars;
  def.parent_map = parents;
  auto card = [&](const std::string& id) {
    for (const auto& v : vars)
      if (v.id == id) return v.cardinality();
    return std::size_t{0};
  };
  for (const auto& v : vars) {
    auto it = parents.find(v.id);
    const std::vector<std::string> ps = it == parents.end() ? std::vector<std::string>{} : it->second;
    const std::size_t c = v.cardinality();
    const std::vector<double> uniform(c, c ? 1.0 / static_cast<double>(c) : 0.0);
    if (noisy_child && v.id == *noisy_child && !ps.empty()) {
      NoisyMaxCpd nm;
      nm.child = v.id;
      nm.parents = ps;
      nm.leak = uniform;
      for (const auto& p : ps) {
        std::vector<std::vector<double>> links(card(p), uniform);
        if (!links.empty()) {
          links[0].assign(c, 0.0);
          links[0][0] = 1.0;
        }
        nm.link_params.push_back(std::move(links));
        nm.off_states.push_back(0);
      }
      def.cpds.emplace_back(std::move(nm));
    } else {
      std::size_t rows = 1;
      for (const auto& p : ps) rows *= card(p);
      def.cpds.emplace_back(Cpt{v.id, ps, std::vector<std::vector<double>>(rows, uniform)});
    }
  }
  auto report = validate_network(def);
  if (!report.ok()) {
    for (const auto& viol : report.violations)
      if (viol.rule == "cycle") throw StructureError("cyclic edge list: " + viol.message);
    throw StructureError("invalid structure: " + report.to_string());
  }
  return BayesianNetwork(std::move(def));
}

std::vector<Variable> class_and_features(const StructureSpec& spec, const std::vector<Variable>& schema,
                                         const std::vector<std::string>& features) {
  std::vector<Variable> vars{schema_var(schema, spec.class_variable, "class variable")};
  for (const auto& f : features) vars.push_back(schema_var(schema, f, "feature"));
  return vars;
}

}  // namespace

std::vector<std::string> resolve_features(const StructureSpec& spec,
                                          const std::vector<Variable>& schema) {
  schema_var(schema, spec.class_variable, "class variable");
  std::vector<std::string> out;
  if (spec.features.empty()) {
    for (const auto& v : schema)
      if (v.id != spec.class_variable) out.push_back(v.id);
    return out;
  }
  for (const auto& f : spec.features) {
    if (f == spec.class_variable)
      throw StructureError("class variable '" + f + "' cannot also be a feature");
    schema_var(schema, f, "feature");
    if (std::find(out.begin(), out.end(), f) != out.end())
      throw StructureError("feature '" + f + "' listed twice");
    out.push_back(f);
  }
  return out;
}

BayesianNetwork build_nbn(const StructureSpec& spec, const std::vector<Variable>& schema) {
  const auto features = resolve_features(spec, schema);
  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& f : features) parents[f] = {spec.class_variable};
  return make_skeleton(class_and_features(spec, schema, features), parents, nullptr);
}

BayesianNetwork build_nor(const StructureSpec& spec, const std::vector<Variable>& schema) {
  const auto features = resolve_features(spec, schema);
  std::map<std::string, std::vector<std::string>> parents;
  if (!features.empty()) parents[spec.class_variable] = features;
  return make_skeleton(class_and_features(spec, schema, features), parents, &spec.class_variable);
}

BayesianNetwork build_cbn(const StructureSpec& spec, const std::vector<Variable>& schema) {
  if (!spec.cbn_edges) throw StructureError("a cbn structure needs cbn_edges");
  auto features = resolve_features(spec, schema);
  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& e : *spec.cbn_edges) {
    for (const auto& id : {e.parent, e.child}) {
      bool known = false;
      for (const auto& v : schema) known = known || v.id == id;
      if (!known) throw StructureError("edge " + e.parent + "->" + e.child + " names undeclared variable '" + id + "'");
      if (id != spec.class_variable && std::find(features.begin(), features.end(), id) == features.end())
        features.push_back(id);
    }
    auto& ps = parents[e.child];
    if (std::find(ps.begin(), ps.end(), e.parent) != ps.end())
      throw StructureError("duplicate edge " + e.parent + "->" + e.child);
    ps.push_back(e.parent);
  }
  return make_skeleton(class_and_features(spec, schema, features), parents, nullptr);
}

double conditional_mutual_information(const Dataset& data, std::size_t i, std::size_t j,
                                      std::size_t c, double pseudocount) {
  if (i == j) throw StructureError("conditional mutual information needs two distinct variables");
  const std::size_t ni = data.variables.at(i).cardinality();
  const std::size_t nj = data.variables.at(j).cardinality();
  const std::size_t nc = data.variables.at(c).cardinality();
  std::vector<double> n(ni * nj * nc, pseudocount);
  for (const auto& row : data.rows) {
    if (row[i] == kMissing || row[j] == kMissing || row[c] == kMissing) continue;
    n[(static_cast<std::size_t>(row[i]) * nj + static_cast<std::size_t>(row[j])) * nc +
      static_cast<std::size_t>(row[c])] += 1.0;
  }
  const double total = std::accumulate(n.begin(), n.end(), 0.0);
  if (total == 0.0) return 0.0;
  std::vector<double> pc(nc, 0.0), pac(ni * nc, 0.0), pbc(nj * nc, 0.0);
  for (std::size_t a = 0; a < ni; ++a)
    for (std::size_t b = 0; b < nj; ++b)
      for (std::size_t k = 0; k < nc; ++k) {
        const double p = n[(a * nj + b) * nc + k] / total;
        pc[k] += p;
        pac[a * nc + k] += p;
        pbc[b * nc + k] += p;
      }
  double cmi = 0.0;
  for (std::size_t a = 0; a < ni; ++a)
    for (std::size_t b = 0; b < nj; ++b)
      for (std::size_t k = 0; k < nc; ++k) {
        const double p = n[(a * nj + b) * nc + k] / total;
        if (p > 0.0) cmi += p * std::log(p * pc[k] / (pac[a * nc + k] * pbc[b * nc + k]));
      }
  return std::max(cmi, 0.0);
}

BayesianNetwork build_tan(const StructureSpec& spec, const Dataset& data, TanDiagnostics* diag) {
  const auto features = resolve_features(spec, data.variables);
  TanDiagnostics local;
  TanDiagnostics& d = diag ? *diag : local;
  d = TanDiagnostics{};
  if (features.size() < 2) {
    d.notice = "TAN needs at least two features; built a naive Bayes network instead";
    StructureSpec nbn = spec;
    nbn.kind = StructureKind::nbn;
    return build_nbn(nbn, data.variables);
  }
  const std::size_t cls = data.require_column(spec.class_variable);
  std::vector<std::size_t> col;
  for (const auto& f : features) col.push_back(data.require_column(f));

  struct Candidate {
    std::size_t i, j;
    double w;
    std::pair<std::string, std::string> key;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      const double w = conditional_mutual_information(data, col[i], col[j], cls);
      d.weights.emplace_back(i, j, w);
      cands.push_back({i, j, w, std::minmax(features[i], features[j])});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.w != b.w) return a.w > b.w;
    return a.key < b.key;
  });

  std::vector<std::size_t> uf(features.size());
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](std::size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<std::vector<std::size_t>> adj(features.size());
  for (const auto& cnd : cands) {
    const auto a = find(cnd.i), b = find(cnd.j);
    if (a == b) continue;
    uf[a] = b;
    adj[cnd.i].push_back(cnd.j);
    adj[cnd.j].push_back(cnd.i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& f : features) parents[f] = {spec.class_variable};
  std::vector<bool> seen(features.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        parents[features[v]].push_back(features[u]);
        d.tree.push_back({features[u], features[v]});
        q.push(v);
      }
  }
  return make_skeleton(class_and_features(spec, data.variables, features), parents, nullptr);
}

BayesianNetwork build_structure(const StructureSpec& spec, const Dataset& data,
                                TanDiagnostics* diagnostics) {
  switch (spec.kind) {
    case StructureKind::tan: return build_tan(spec, data, diagnostics);
    case StructureKind::nor: return build_nor(spec, data.variables);
    case StructureKind::cbn: return build_cbn(spec, data.variables);
    default: return build_nbn(spec, data.variables);
  }
}

StructureSpec reference_cbn() {
  StructureSpec spec;
  spec.kind = StructureKind::cbn;
  spec.class_variable = "qos_value";
  std::vector<Edge> edges{{"cloud", "cpu_type"}, {"region", "cpu_type"}, {"vm_size", "cpu_type"}};
  for (const auto& id : factor_ids()) {
    if (id == "qos_value") continue;
    spec.features.push_back(id);
    edges.push_back({id, "qos_value"});
  }
  spec.cbn_edges = std::move(edges);
  return spec;
}

StructureSpec restrict_structure(const StructureSpec& spec, const std::vector<Variable>& schema) {
  auto present = [&](const std::string& id) {
    return std::any_of(schema.begin(), schema.end(), [&](const Variable& v) { return v.id == id; });
  };
  StructureSpec out = spec;
  out.features.clear();
  for (const auto& f : spec.features)
    if (present(f)) out.features.push_back(f);
  if (spec.cbn_edges) {
    out.cbn_edges = std::vector<Edge>{};
    for (const auto& e : *spec.cbn_edges)
      if (present(e.parent) && present(e.child)) out.cbn_edges->push_back(e);
  }
  return out;
}

}  // namespace qosbn
