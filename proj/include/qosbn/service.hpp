#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "qosbn/inference.hpp"
#include "qosbn/network.hpp"

namespace qosbn {

/// Posteriors for a list of query variables under one evidence set.
struct Diagnosis {
  std::vector<Posterior> posteriors;
  double evidence_probability = 1.0;
};

/// Shared by the CLI and the service. An empty query list means every
/// variable without hard evidence. Throws InvalidEvidence for unknown query
/// ids and ImpossibleEvidence when P(e) = 0.
Diagnosis diagnose(const BayesianNetwork& bn, const EvidenceSet& e,
                   const std::vector<std::string>& queries);

nlohmann::json diagnosis_to_json(const Diagnosis& d);

/// {"hard": {"var": "state"}, "soft": {"var": [p1, p2, ...]}}; both keys
/// optional. Throws InvalidEvidence on a malformed document.
EvidenceSet evidence_from_json(const nlohmann::json& j);
nlohmann::json evidence_to_json(const EvidenceSet& e);

struct SessionModel {
  std::string id;
  std::shared_ptr<const BayesianNetwork> network;
  /// Where the model came from, e.g. its file path.
  std::string provenance;
};

/// Immutable set of models keyed by id. Lookups take a snapshot; replace()
/// swaps the whole set at once.
class ModelRegistry {
 public:
  using Models = std::map<std::string, SessionModel>;

  /// Throws std::invalid_argument on a duplicate or empty id.
  void add(const std::string& id, BayesianNetwork network, std::string provenance = {});
  void replace(Models models);
  std::shared_ptr<const Models> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Models> models_ = std::make_shared<const Models>();
};

/// Loads every *.json network in a directory, id = file stem.
ModelRegistry::Models load_model_directory(const std::filesystem::path& dir);

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// GET /models
ServiceResponse handle_list_models(const ModelRegistry& registry);
/// POST /models/{id}/infer with body {"evidence": {...}, "query": [...]}.
/// 400 malformed body, 404 unknown model, 422 invalid evidence or query,
/// 409 impossible evidence.
ServiceResponse handle_infer(const ModelRegistry& registry, const std::string& id,
                             const std::string& body);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  bool cors = false;
};

/// HTTP front end over a registry. Endpoints: GET /healthz, GET /models,
/// POST /models/{id}/infer.
class DiagnosisServer {
 public:
  DiagnosisServer(ModelRegistry& registry, ServiceOptions options);
  ~DiagnosisServer();
  DiagnosisServer(const DiagnosisServer&) = delete;
  DiagnosisServer& operator=(const DiagnosisServer&) = delete;

  /// Binds the socket and returns the port; throws std::runtime_error.
  int bind();
  /// Serves until stop(); call bind() first.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qosbn
