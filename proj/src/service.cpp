#include "qosbn/service.hpp"

#include <algorithm>
#include <stdexcept>

#include <httplib.h>

#include "qosbn/network_io.hpp"

namespace qosbn {

using nlohmann::json;

Diagnosis diagnose(const BayesianNetwork& bn, const EvidenceSet& e,
                   const std::vector<std::string>& queries) {
  const InferenceEngine engine(bn);
  std::vector<std::string> q = queries;
  if (q.empty()) {
    for (std::size_t v = 0; v < bn.size(); ++v)
      if (!e.hard.count(bn.variable(v).id)) q.push_back(bn.variable(v).id);
  }
  for (const auto& id : q)
    if (!bn.find(id)) throw InvalidEvidence("unknown query variable '" + id + "'");

  Diagnosis d;
  if (q.empty()) {
    const auto indexed = resolve_evidence(bn, e);
    d.evidence_probability = engine.evidence_probability(indexed);
    if (!(d.evidence_probability > 0.0)) throw ImpossibleEvidence(e.describe());
    return d;
  }
  for (const auto& id : q) d.posteriors.push_back(engine.posterior(e, id));
  d.evidence_probability = d.posteriors.front().evidence_probability;
  return d;
}

json diagnosis_to_json(const Diagnosis& d) {
  json posts = json::array();
  for (const auto& p : d.posteriors)
    posts.push_back({{"variable", p.variable}, {"states", p.states}, {"probabilities", p.distribution}});
  return {{"evidence_probability", d.evidence_probability}, {"posteriors", posts}};
}

EvidenceSet evidence_from_json(const json& j) {
  EvidenceSet e;
  if (j.is_null()) return e;
  if (!j.is_object()) throw InvalidEvidence("evidence must be an object");
  for (const auto& [key, value] : j.items())
    if (key != "hard" && key != "soft") throw InvalidEvidence("unknown evidence key '" + key + "'");
  if (j.contains("hard")) {
    const auto& h = j.at("hard");
    if (!h.is_object()) throw InvalidEvidence("'hard' must map variables to state labels");
    for (const auto& [var, state] : h.items()) {
      if (!state.is_string()) throw InvalidEvidence("hard evidence on '" + var + "' must be a state label");
      e.hard[var] = state.get<std::string>();
    }
  }
  if (j.contains("soft")) {
    const auto& s = j.at("soft");
    if (!s.is_object()) throw InvalidEvidence("'soft' must map variables to likelihood vectors");
    for (const auto& [var, vec] : s.items()) {
      if (!vec.is_array() || !std::all_of(vec.begin(), vec.end(), [](const json& x) { return x.is_number(); }))
        throw InvalidEvidence("soft evidence on '" + var + "' must be an array of numbers");
      e.soft[var] = vec.get<std::vector<double>>();
    }
  }
  return e;
}

json evidence_to_json(const EvidenceSet& e) {
  json j = json::object();
  if (!e.hard.empty()) j["hard"] = e.hard;
  if (!e.soft.empty()) j["soft"] = e.soft;
  return j;
}

void ModelRegistry::add(const std::string& id, BayesianNetwork network, std::string provenance) {
  if (id.empty()) throw std::invalid_argument("model id must not be empty");
  std::lock_guard lock(mutex_);
  if (models_->count(id)) throw std::invalid_argument("duplicate model id '" + id + "'");
  auto next = std::make_shared<Models>(*models_);
  next->emplace(id, SessionModel{id, std::make_shared<const BayesianNetwork>(std::move(network)),
                                 std::move(provenance)});
  models_ = std::move(next);
}

void ModelRegistry::replace(Models models) {
  auto next = std::make_shared<const Models>(std::move(models));
  std::lock_guard lock(mutex_);
  models_ = std::move(next);
}

std::shared_ptr<const ModelRegistry::Models> ModelRegistry::snapshot() const {
  std::lock_guard lock(mutex_);
  return models_;
}

ModelRegistry::Models load_model_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  ModelRegistry::Models out;
  for (const auto& f : files) {
    const auto id = f.stem().string();
    out.emplace(id, SessionModel{id, std::make_shared<const BayesianNetwork>(load_network(f)), f.string()});
  }
  return out;
}

namespace {

ServiceResponse error(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

}  // namespace

ServiceResponse handle_list_models(const ModelRegistry& registry) {
  json out = json::array();
  for (const auto& [id, m] : *registry.snapshot()) {
    json vars = json::array();
    for (std::size_t v = 0; v < m.network->size(); ++v) {
      const auto& var = m.network->variable(v);
      vars.push_back({{"id", var.id}, {"name", var.name}, {"states", var.states}});
    }
    out.push_back({{"id", id}, {"provenance", m.provenance}, {"variables", vars}});
  }
  return {200, out};
}

ServiceResponse handle_infer(const ModelRegistry& registry, const std::string& id,
                             const std::string& body) {
  const auto models = registry.snapshot();
  const auto it = models->find(id);
  if (it == models->end()) return error(404, "unknown model '" + id + "'");

  json req;
  try {
    req = body.empty() ? json::object() : json::parse(body);
  } catch (const json::parse_error& ex) {
    return error(400, std::string("malformed JSON: ") + ex.what());
  }
  if (!req.is_object()) return error(400, "request body must be a JSON object");

  try {
    const auto evidence = evidence_from_json(req.value("evidence", json()));
    std::vector<std::string> queries;
    if (req.contains("query")) {
      const auto& q = req.at("query");
      if (q.is_string()) {
        queries.push_back(q.get<std::string>());
      } else if (q.is_array() && std::all_of(q.begin(), q.end(), [](const json& x) { return x.is_string(); })) {
        queries = q.get<std::vector<std::string>>();
      } else {
        return error(422, "'query' must be a variable id or a list of ids");
      }
    }
    auto out = diagnosis_to_json(diagnose(*it->second.network, evidence, queries));
    out["model"] = id;
    return {200, out};
  } catch (const InvalidEvidence& ex) {
    return error(422, ex.what());
  } catch (const ImpossibleEvidence& ex) {
    return error(409, ex.what());
  }
}

struct DiagnosisServer::Impl {
  Impl(ModelRegistry& r, ServiceOptions o) : registry(r), options(std::move(o)) {}
  ModelRegistry& registry;
  ServiceOptions options;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

DiagnosisServer::DiagnosisServer(ModelRegistry& registry, ServiceOptions options)
    : impl_(std::make_unique<Impl>(registry, std::move(options))) {
  auto& s = impl_->server;
  auto* impl = impl_.get();
  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  s.Get("/models", [impl](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_list_models(impl->registry));
  });
  s.Post(R"(/models/([^/]+)/infer)", [impl](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_infer(impl->registry, req.matches[1].str(), req.body));
  });
  if (impl_->options.cors) {
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
}

DiagnosisServer::~DiagnosisServer() { stop(); }

int DiagnosisServer::bind() {
  auto& s = impl_->server;
  const auto& o = impl_->options;
  if (o.port == 0) {
    const int port = s.bind_to_any_port(o.host);
    if (port < 0) throw std::runtime_error("cannot bind " + o.host);
    return port;
  }
  if (!s.bind_to_port(o.host, o.port))
    throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return o.port;
}

void DiagnosisServer::run() { impl_->server.listen_after_bind(); }

void DiagnosisServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace qosbn
