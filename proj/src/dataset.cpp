#include "qosbn/dataset.hpp"

#include <fstream>
#include <set>

namespace qosbn {

using nlohmann::json;

std::optional<std::size_t> Dataset::column(const std::string& id) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].id == id) return i;
  return std::nullopt;
}

std::size_t Dataset::require_column(const std::string& id) const {
  auto c = column(id);
  if (!c) throw DataError("variable '" + id + "' is not in the dataset schema");
  return *c;
}

void Dataset::add(const Record& r) {
  std::vector<int> row(variables.size(), kMissing);
  for (const auto& [id, label] : r) {
    const std::size_t c = require_column(id);
    auto s = variables[c].state_index(label);
    if (!s) throw DataError("unknown state '" + label + "' for variable '" + id + "'");
    row[c] = static_cast<int>(*s);
  }
  rows.push_back(std::move(row));
}

Record Dataset::record(std::size_t row) const {
  Record r;
  for (std::size_t c = 0; c < variables.size(); ++c) {
    const int s = rows.at(row)[c];
    if (s != kMissing) r[variables[c].id] = variables[c].states[static_cast<std::size_t>(s)];
  }
  return r;
}

Dataset make_dataset(std::vector<Variable> variables, const std::vector<Record>& records) {
  Dataset ds;
  ds.variables = std::move(variables);
  for (const auto& r : records) ds.add(r);
  return ds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.variables = ds.variables;
  out.rows.reserve(rows.size());
  for (auto r : rows) out.rows.push_back(ds.rows.at(r));
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.variables.size() != b.variables.size())
    throw DataError("cannot concatenate datasets with different schemas");
  for (std::size_t i = 0; i < a.variables.size(); ++i)
    if (a.variables[i].id != b.variables[i].id || a.variables[i].states != b.variables[i].states)
      throw DataError("cannot concatenate datasets with different schemas");
  Dataset out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  return out;
}

Dataset filter_equal(const Dataset& ds, const std::string& variable, const std::string& label) {
  const std::size_t c = ds.require_column(variable);
  auto s = ds.variables[c].state_index(label);
  Dataset out;
  out.variables = ds.variables;
  if (!s) return out;
  for (const auto& row : ds.rows)
    if (row[c] == static_cast<int>(*s)) out.rows.push_back(row);
  return out;
}

Dataset drop_variable(const Dataset& ds, const std::string& variable) {
  const std::size_t c = ds.require_column(variable);
  Dataset out;
  out.variables = ds.variables;
  out.variables.erase(out.variables.begin() + static_cast<std::ptrdiff_t>(c));
  out.rows.reserve(ds.rows.size());
  for (const auto& row : ds.rows) {
    auto r = row;
    r.erase(r.begin() + static_cast<std::ptrdiff_t>(c));
    out.rows.push_back(std::move(r));
  }
  return out;
}

Dataset restrict_states(const Dataset& ds, const std::string& variable,
                        const std::vector<std::string>& labels) {
  const std::size_t c = ds.require_column(variable);
  Variable next = ds.variables[c];
  next.states = labels;
  std::vector<int> remap(ds.variables[c].states.size(), kMissing);
  for (std::size_t s = 0; s < remap.size(); ++s) {
    auto idx = next.state_index(ds.variables[c].states[s]);
    if (idx) remap[s] = static_cast<int>(*idx);
  }
  Dataset out;
  out.variables = ds.variables;
  out.variables[c] = std::move(next);
  out.rows = ds.rows;
  for (auto& row : out.rows) {
    if (row[c] == kMissing) continue;
    const int m = remap[static_cast<std::size_t>(row[c])];
    if (m == kMissing)
      throw DataError("state '" + ds.variables[c].states[static_cast<std::size_t>(row[c])] +
                      "' of '" + variable + "' is outside the restricted state list");
    row[c] = m;
  }
  return out;
}

std::vector<int> ColumnBinding::translate(const std::vector<int>& row) const {
  std::vector<int> out(column.size(), kMissing);
  for (std::size_t v = 0; v < column.size(); ++v) {
    const int s = row[column[v]];
    if (s != kMissing) out[v] = state_map[v][static_cast<std::size_t>(s)];
  }
  return out;
}

ColumnBinding bind_columns(const BayesianNetwork& bn, const Dataset& ds) {
  ColumnBinding b;
  for (std::size_t v = 0; v < bn.size(); ++v) {
    const auto& var = bn.variable(v);
    const std::size_t c = ds.require_column(var.id);
    b.column.push_back(c);
    std::vector<int> map;
    for (const auto& label : ds.variables[c].states) {
      auto s = var.state_index(label);
      if (!s)
        throw DataError("dataset state '" + label + "' of '" + var.id +
                        "' is not a state of the network variable");
      map.push_back(static_cast<int>(*s));
    }
    b.state_map.push_back(std::move(map));
  }
  return b;
}

json schema_to_json(const Dataset& ds) {
  json vars = json::array();
  for (const auto& v : ds.variables)
    vars.push_back({{"id", v.id}, {"name", v.name}, {"states", v.states}});
  return {{"variables", vars}};
}

std::vector<Variable> schema_from_json(const json& j) {
  std::vector<Variable> out;
  try {
    for (const auto& jv : j.at("variables")) {
      Variable v;
      v.id = jv.at("id").get<std::string>();
      v.name = jv.value("name", v.id);
      v.states = jv.at("states").get<std::vector<std::string>>();
      out.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dataset schema: ") + e.what());
  }
  return out;
}

std::filesystem::path schema_path(const std::filesystem::path& data_path) {
  return data_path.string() + ".schema.json";
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    json line = json::object();
    for (const auto& [k, v] : ds.record(r)) line[k] = v;
    out << line.dump() << '\n';
  }
  std::ofstream schema(schema_path(path), std::ios::binary);
  if (!schema) throw DataError("cannot write dataset schema " + schema_path(path).string());
  schema << schema_to_json(ds).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      Record r;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_null()) continue;
        if (!it.value().is_string())
          throw DataError(path.string() + ":" + std::to_string(lineno) + ": value of '" +
                          it.key() + "' is not a string");
        r[it.key()] = it.value().get<std::string>();
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }

  std::vector<Variable> vars;
  const auto sp = schema_path(path);
  if (std::filesystem::exists(sp)) {
    std::ifstream s(sp);
    try {
      vars = schema_from_json(json::parse(s));
    } catch (const json::exception& e) {
      throw DataError(sp.string() + ": " + e.what());
    }
  } else {
    std::map<std::string, std::size_t> index;
    for (const auto& r : records)
      for (const auto& [id, label] : r) {
        auto [it, fresh] = index.emplace(id, vars.size());
        if (fresh) vars.push_back(Variable{id, id, {}});
        auto& v = vars[it->second];
        if (!v.state_index(label)) v.states.push_back(label);
      }
  }
  return make_dataset(std::move(vars), records);
}

}  // namespace qosbn
