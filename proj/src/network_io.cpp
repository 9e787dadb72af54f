#include "qosbn/network_io.hpp"

#include <cmath>
#include <fstream>

namespace qosbn {

using nlohmann::json;

namespace {

std::vector<double> read_distribution(const json& j) {
  auto row = j.get<std::vector<double>>();
  double sum = 0.0;
  for (double p : row) sum += p;
  const double off = std::abs(sum - 1.0);
  if (off > kRowSumTolerance && off <= kLoadRenormalizeTolerance)
    for (double& p : row) p /= sum;
  return row;
}

const Variable* lookup(const std::vector<Variable>& vars, const std::string& id) {
  for (const auto& v : vars)
    if (v.id == id) return &v;
  return nullptr;
}

}  // namespace

NetworkDefinition definition_from_json(const json& doc) {
  try {
    NetworkDefinition def;
    for (const auto& jv : doc.at("variables")) {
      Variable v;
      v.id = jv.at("id").get<std::string>();
      v.name = jv.value("name", v.id);
      v.states = jv.at("states").get<std::vector<std::string>>();
      def.variables.push_back(std::move(v));
    }
    if (doc.contains("edges")) {
      for (const auto& je : doc.at("edges")) {
        auto& parents = def.parent_map[je.at("child").get<std::string>()];
        for (const auto& p : je.at("parents")) parents.push_back(p.get<std::string>());
      }
    }
    for (const auto& jc : doc.at("cpds")) {
      const auto child = jc.at("child").get<std::string>();
      const auto type = jc.value("type", std::string("table"));
      auto pit = def.parent_map.find(child);
      const auto parents =
          pit == def.parent_map.end() ? std::vector<std::string>{} : pit->second;
      if (type == "table") {
        Cpt cpt{child, parents, {}};
        for (const auto& row : jc.at("rows")) cpt.rows.push_back(read_distribution(row));
        def.cpds.emplace_back(std::move(cpt));
      } else if (type == "noisy_max") {
        NoisyMaxCpd nm;
        nm.child = child;
        nm.leak = read_distribution(jc.at("leak"));
        for (const auto& jl : jc.at("link_params")) {
          const auto parent = jl.at("parent").get<std::string>();
          nm.parents.push_back(parent);
          std::vector<std::vector<double>> vectors;
          for (const auto& vec : jl.at("vectors")) vectors.push_back(read_distribution(vec));
          nm.link_params.push_back(std::move(vectors));
          std::size_t off = 0;
          if (jl.contains("off_state")) {
            const auto label = jl.at("off_state").get<std::string>();
            const Variable* pv = lookup(def.variables, parent);
            auto idx = pv ? pv->state_index(label) : std::nullopt;
            off = idx ? *idx : static_cast<std::size_t>(-1);
          }
          nm.off_states.push_back(off);
        }
        def.cpds.emplace_back(std::move(nm));
      } else {
        throw FormatError("unknown cpd type '" + type + "' for '" + child + "'");
      }
    }
    return def;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed network document: ") + e.what());
  }
}

json definition_to_json(const NetworkDefinition& def) {
  json doc;
  doc["variables"] = json::array();
  for (const auto& v : def.variables)
    doc["variables"].push_back({{"id", v.id}, {"name", v.name}, {"states", v.states}});
  doc["edges"] = json::array();
  for (const auto& v : def.variables) {
    auto it = def.parent_map.find(v.id);
    if (it != def.parent_map.end() && !it->second.empty())
      doc["edges"].push_back({{"child", v.id}, {"parents", it->second}});
  }
  doc["cpds"] = json::array();
  for (const auto& cpd : def.cpds) {
    if (const auto* cpt = std::get_if<Cpt>(&cpd)) {
      doc["cpds"].push_back({{"child", cpt->child}, {"type", "table"}, {"rows", cpt->rows}});
    } else {
      const auto& nm = std::get<NoisyMaxCpd>(cpd);
      json links = json::array();
      for (std::size_t p = 0; p < nm.parents.size(); ++p) {
        const Variable* pv = lookup(def.variables, nm.parents[p]);
        json jl{{"parent", nm.parents[p]}, {"vectors", nm.link_params[p]}};
        if (pv && nm.off_states[p] < pv->states.size())
          jl["off_state"] = pv->states[nm.off_states[p]];
        links.push_back(std::move(jl));
      }
      doc["cpds"].push_back(
          {{"child", nm.child}, {"type", "noisy_max"}, {"leak", nm.leak}, {"link_params", links}});
    }
  }
  return doc;
}

BayesianNetwork network_from_json(const json& doc) {
  return BayesianNetwork(definition_from_json(doc));
}

json network_to_json(const BayesianNetwork& bn) { return definition_to_json(bn.definition()); }

BayesianNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read network file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return network_from_json(doc);
}

void save_network(const BayesianNetwork& bn, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network file " + path.string());
  out << network_to_json(bn).dump(2) << '\n';
}

}  // namespace qosbn
