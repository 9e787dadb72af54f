// qosbn command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 impossible evidence.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qosbn/dataset.hpp"
#include "qosbn/discretization.hpp"
#include "qosbn/evaluation.hpp"
#include "qosbn/inference.hpp"
#include "qosbn/ingestion.hpp"
#include "qosbn/learning.hpp"
#include "qosbn/network_io.hpp"
#include "qosbn/service.hpp"
#include "qosbn/structure.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qosbn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitImpossible = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw DataError(what + " '" + p.string() + "' does not exist");
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + p.string() + "'");
}

std::vector<double> read_values(const fs::path& p) {
  require_file(p, "values file");
  std::ifstream in(p);
  std::vector<double> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw DataError(p.string() + ":" + std::to_string(n) + ": not a number '" + line + "'");
    }
  }
  return out;
}

std::map<std::string, DiscretizationSpec> load_presets(const std::string& dir) {
  if (dir.empty()) return default_presets();
  if (!fs::is_directory(dir)) throw DataError("preset directory '" + dir + "' does not exist");
  std::map<std::string, DiscretizationSpec> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") out[entry.path().stem().string()] = load_spec(entry.path());
  if (out.empty()) throw DataError("no preset files in '" + dir + "'");
  return out;
}

EvidenceSet parse_evidence(const std::vector<std::string>& hard, const std::vector<std::string>& soft) {
  EvidenceSet e;
  for (const auto& item : hard) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw UsageError("--evidence expects var=state, got '" + item + "'");
    const auto var = item.substr(0, eq);
    if (e.hard.count(var) || e.soft.count(var)) throw UsageError("evidence on '" + var + "' given twice");
    e.hard[var] = item.substr(eq + 1);
  }
  for (const auto& item : soft) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--soft expects var=p1,p2,..., got '" + item + "'");
    const auto var = item.substr(0, eq);
    if (e.hard.count(var) || e.soft.count(var)) throw UsageError("evidence on '" + var + "' given twice");
    std::vector<double> vec;
    std::stringstream ss(item.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw UsageError("--soft value for '" + var + "' is not a number: '" + tok + "'");
      }
    }
    e.soft[var] = vec;
  }
  return e;
}

StructureSpec structure_for(const std::string& kind, const std::string& file,
                            const std::vector<std::string>& features) {
  StructureSpec spec;
  if (!file.empty()) {
    require_file(file, "structure file");
    spec = load_structure(file);
  } else {
    try {
      spec.kind = structure_kind_from_string(kind);
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
    if (spec.kind == StructureKind::cbn) spec = reference_cbn();
  }
  if (!features.empty()) spec.features = features;
  return spec;
}

struct EmFlags {
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;
  double pseudocount = 1.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::size_t threads = 1;

  void attach(CLI::App* app) {
    app->add_option("--max-iter", max_iterations, "EM iteration budget")->capture_default_str();
    app->add_option("--tol", tolerance, "EM convergence tolerance")->capture_default_str();
    app->add_option("--pseudocount", pseudocount, "Dirichlet pseudocount")->capture_default_str();
    app->add_option("--em-seed", seed, "Seed for EM restarts")->capture_default_str();
    app->add_option("--restarts", restarts, "Extra EM runs from random starts")->capture_default_str();
    app->add_option("--threads", threads, "E-step worker threads")->capture_default_str();
  }
  EmConfig config() const {
    EmConfig c;
    c.max_iterations = max_iterations;
    c.tolerance = tolerance;
    c.pseudocount = pseudocount;
    c.seed = seed;
    c.restarts = restarts;
    c.threads = threads;
    try {
      c.validate();
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
    return c;
  }
};

std::string format_diagnosis(const Diagnosis& d, const EvidenceSet& e) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "evidence " << e.describe() << "\n";
  os << "P(evidence) = " << d.evidence_probability << "\n";
  for (const auto& p : d.posteriors) {
    std::size_t width = 5;
    for (const auto& s : p.states) width = std::max(width, s.size());
    os << "\nP(" << p.variable << " | evidence)\n";
    for (std::size_t i = 0; i < p.states.size(); ++i)
      os << "  " << std::left << std::setw(static_cast<int>(width)) << p.states[i] << "  "
         << std::right << p.distribution[i] << "\n";
  }
  return os.str();
}

// --- subcommands -----------------------------------------------------------

struct IngestArgs {
  std::string input, config, output, summary, rejections, presets, policy = "clamp";
  std::size_t tod_bins = 0;  // 0: keep the config's value
};

int run_ingest(const IngestArgs& a) {
  require_file(a.input, "input CSV");
  IngestConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config, "ingest config");
    cfg = load_ingest_config(a.config);
  }
  if (a.tod_bins) cfg.tod_bins = a.tod_bins;
  if (cfg.tod_bins == 0 || 24 % cfg.tod_bins != 0) throw UsageError("time-of-day bins must divide 24");
  const auto policy = a.policy == "reject" ? RangePolicy::reject : RangePolicy::clamp;
  if (a.policy != "reject" && a.policy != "clamp") throw UsageError("--range must be clamp or reject");

  const auto parsed = parse_csv(fs::path(a.input), cfg);
  const auto ds = to_records(parsed.records, load_presets(a.presets), cfg.tod_bins, policy);
  save_dataset(ds, a.output);

  std::cout << "rows " << parsed.data_rows << ", records " << ds.size() << ", rejected "
            << parsed.rejections.size() << "\n";
  for (std::size_t i = 0; i < parsed.rejections.size() && i < 10; ++i)
    std::cerr << "line " << parsed.rejections[i].line << ": " << parsed.rejections[i].reason << "\n";
  if (parsed.rejections.size() > 10)
    std::cerr << "... " << parsed.rejections.size() - 10 << " more rejections\n";
  if (!a.rejections.empty()) {
    std::ostringstream os;
    for (const auto& r : parsed.rejections)
      os << json{{"line", r.line}, {"reason", r.reason}}.dump() << "\n";
    write_file(a.rejections, os.str());
  }
  const auto summary = format_summary(summarize(parsed.records));
  if (!a.summary.empty()) write_file(a.summary, summary);
  std::cout << summary;
  return 0;
}

struct DiscretizeArgs {
  std::string preset, values, output, variable = "qos_value";
  std::size_t bins = 10;
  std::vector<double> assign;
};

int run_discretize(const DiscretizeArgs& a) {
  if (a.preset.empty() == a.values.empty()) throw UsageError("give exactly one of --preset or --values");
  DiscretizationSpec spec;
  if (!a.preset.empty()) {
    try {
      spec = preset(a.preset);
    } catch (const std::out_of_range&) {
      throw UsageError("unknown preset '" + a.preset + "'");
    }
  } else {
    const auto values = read_values(a.values);
    auto result = hierarchical_discretize(values, a.bins, a.variable);
    if (result.notice) std::cerr << "notice: " << *result.notice << "\n";
    spec = std::move(result.spec);
  }
  const auto text = spec_to_json(spec).dump(2) + "\n";
  if (!a.output.empty()) write_file(a.output, text);
  if (a.assign.empty()) {
    if (a.output.empty()) std::cout << text;
  } else {
    for (double v : a.assign) {
      const auto b = assign_state(spec, v, RangePolicy::clamp);
      std::cout << v << "\t" << b.state_index << "\t" << b.state_label << "\n";
    }
  }
  return 0;
}

Dataset maybe_slice(const Dataset& ds, const std::string& benchmark, const std::string& presets) {
  if (benchmark.empty()) return ds;
  const auto all = load_presets(presets);
  const auto it = all.find(benchmark);
  if (it == all.end()) throw DataError("no discretization preset for benchmark '" + benchmark + "'");
  auto out = slice_benchmark(ds, benchmark, it->second);
  if (out.size() == 0) throw DataError("no records for benchmark '" + benchmark + "'");
  return out;
}

struct LearnArgs {
  std::string data, output, structure = "nbn", structure_file, benchmark, presets, trace;
  std::vector<std::string> features;
  EmFlags em;
};

int run_learn(const LearnArgs& a) {
  require_file(a.data, "dataset");
  const auto spec_in = structure_for(a.structure, a.structure_file, a.features);
  const auto em = a.em.config();
  const auto ds = maybe_slice(load_dataset(a.data), a.benchmark, a.presets);
  const auto spec = restrict_structure(spec_in, ds.variables);
  TanDiagnostics diag;
  const auto skeleton = build_structure(spec, ds, &diag);
  if (diag.notice) std::cerr << "notice: " << *diag.notice << "\n";
  const auto fit = learn_em(skeleton, ds, em);
  save_network(fit.network, a.output);
  std::cout << to_string(spec.kind) << ": " << fit.iterations << " iterations, "
            << (fit.converged ? "converged" : "not converged") << ", objective " << std::setprecision(10)
            << fit.trace.back() << "\n";
  if (!a.trace.empty()) write_file(a.trace, json(fit.trace).dump() + "\n");
  return 0;
}

struct DiagnoseArgs {
  std::string model;
  std::vector<std::string> evidence, soft, query;
  bool json_out = false;
};

int run_diagnose(const DiagnoseArgs& a) {
  require_file(a.model, "model");
  const auto bn = load_network(a.model);
  const auto e = parse_evidence(a.evidence, a.soft);
  const auto d = diagnose(bn, e, a.query);
  if (a.json_out)
    std::cout << diagnosis_to_json(d).dump() << "\n";
  else
    std::cout << format_diagnosis(d, e);
  return 0;
}

struct PredictArgs {
  std::string model, data, output, target = "qos_value", benchmark, presets;
};

int run_predict(const PredictArgs& a) {
  require_file(a.model, "model");
  require_file(a.data, "dataset");
  const auto bn = load_network(a.model);
  const auto ds = maybe_slice(load_dataset(a.data), a.benchmark, a.presets);
  const auto target = bn.find(a.target);
  if (!target) throw DataError("model has no variable '" + a.target + "'");
  const auto binding = bind_columns(bn, ds);
  const InferenceEngine engine(bn);
  const auto& states = bn.variable(*target).states;

  std::map<std::vector<int>, std::pair<std::size_t, double>> cache;
  std::ostringstream os;
  std::size_t scored = 0, correct = 0, fallbacks = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto row = binding.translate(ds.rows[i]);
    const int truth = row[*target];
    row[*target] = kMissing;
    auto it = cache.find(row);
    if (it == cache.end()) {
      IndexedEvidence e;
      for (std::size_t v = 0; v < row.size(); ++v)
        if (row[v] != kMissing) e.hard[v] = static_cast<std::size_t>(row[v]);
      Factor post;
      try {
        post = engine.marginal(e, {*target});
      } catch (const ImpossibleEvidence&) {
        post = engine.marginal({}, {*target});
        ++fallbacks;
      }
      const auto best = argmax_lowest(post.values());
      it = cache.emplace(row, std::make_pair(best, post.values()[best])).first;
    }
    json line{{"row", i}, {"predicted", states[it->second.first]}, {"probability", it->second.second}};
    if (truth != kMissing) {
      line["actual"] = states[static_cast<std::size_t>(truth)];
      ++scored;
      if (static_cast<std::size_t>(truth) == it->second.first) ++correct;
    }
    os << line.dump() << "\n";
  }
  if (a.output.empty())
    std::cout << os.str();
  else
    write_file(a.output, os.str());
  std::cerr << "predicted " << ds.size() << " records";
  if (scored)
    std::cerr << ", accuracy " << std::fixed << std::setprecision(4)
              << static_cast<double>(correct) / static_cast<double>(scored) << " over " << scored;
  if (fallbacks) std::cerr << ", " << fallbacks << " evidence patterns fell back to the prior";
  std::cerr << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string data, output, table, structure_file, presets;
  std::vector<std::string> structures{"nbn"}, benchmarks;
  std::size_t k = 10, seeds = 1;
  std::uint64_t seed = 1;
  bool pooled = false;
  EmFlags em;
};

int run_evaluate(const EvaluateArgs& a) {
  require_file(a.data, "dataset");
  const auto em = a.em.config();
  if (a.seeds == 0) throw UsageError("--seeds must be positive");
  const auto ds = load_dataset(a.data);

  std::vector<StructureSpec> specs;
  if (!a.structure_file.empty())
    specs.push_back(structure_for("", a.structure_file, {}));
  else
    for (const auto& s : a.structures) specs.push_back(structure_for(s, "", {}));

  // One slice per benchmark unless the data has no benchmark column or the
  // caller asks for the pooled dataset.
  std::vector<std::pair<std::string, Dataset>> slices;
  const auto bcol = ds.column("benchmark");
  if (a.pooled || !bcol) {
    slices.emplace_back("all", ds);
  } else {
    std::vector<std::string> names = a.benchmarks;
    if (names.empty()) {
      std::vector<bool> seen(ds.variables[*bcol].states.size(), false);
      for (const auto& row : ds.rows)
        if (row[*bcol] != kMissing) seen[static_cast<std::size_t>(row[*bcol])] = true;
      for (std::size_t s = 0; s < seen.size(); ++s)
        if (seen[s]) names.push_back(ds.variables[*bcol].states[s]);
    }
    for (const auto& b : names) slices.emplace_back(b, maybe_slice(ds, b, a.presets));
  }

  std::vector<EvalReport> reports;
  json sensitivity = json::array();
  for (const auto& spec : specs) {
    for (const auto& [label, slice] : slices) {
      CvOptions opt;
      opt.k = a.k;
      opt.seed = a.seed;
      opt.em = em;
      opt.label = label;
      if (a.k > slice.size())
        throw DataError("cannot split " + std::to_string(slice.size()) + " records of '" + label +
                        "' into " + std::to_string(a.k) + " folds");
      reports.push_back(cross_validate(spec, slice, opt));
      if (a.seeds > 1) {
        std::vector<double> acc{reports.back().accuracy()};
        for (std::size_t s = 1; s < a.seeds; ++s) {
          opt.seed = a.seed + s;
          acc.push_back(cross_validate(spec, slice, opt).accuracy());
        }
        const auto st = summarize_values(acc);
        sensitivity.push_back({{"structure", to_string(spec.kind)},
                               {"label", label},
                               {"seeds", a.seeds},
                               {"accuracies", acc},
                               {"min", st.min},
                               {"max", st.max},
                               {"std", st.std}});
      }
    }
  }

  auto doc = reports_to_json(reports);
  if (a.seeds > 1) doc["seed_sensitivity"] = sensitivity;
  if (!a.output.empty()) write_file(a.output, doc.dump(2) + "\n");
  const auto text = accuracy_table(reports);
  if (!a.table.empty()) write_file(a.table, text);
  std::cout << text;
  for (const auto& r : reports) {
    for (const auto& n : r.notices) std::cerr << "notice (" << r.structure << "/" << r.label << "): " << n << "\n";
    if (r.prior_fallbacks)
      std::cerr << "notice (" << r.structure << "/" << r.label << "): " << r.prior_fallbacks
                << " test records predicted from the prior\n";
  }
  for (const auto& s : sensitivity)
    std::cout << "seed spread " << s["structure"].get<std::string>() << "/" << s["label"].get<std::string>()
              << ": min " << 100.0 * s["min"].get<double>() << "%, max " << 100.0 * s["max"].get<double>()
              << "%, std " << 100.0 * s["std"].get<double>() << " pp\n";
  return 0;
}

struct ServeArgs {
  std::string models_dir, host = "127.0.0.1";
  std::vector<std::string> models;
  int port = 8080;
  bool cors = false;
};

std::atomic<bool> g_stop{false};
std::atomic<bool> g_reload{false};

ModelRegistry::Models load_models(const ServeArgs& a) {
  ModelRegistry::Models out;
  if (!a.models_dir.empty()) {
    if (!fs::is_directory(a.models_dir)) throw DataError("model directory '" + a.models_dir + "' does not exist");
    out = load_model_directory(a.models_dir);
  }
  for (const auto& m : a.models) {
    require_file(m, "model");
    const auto id = fs::path(m).stem().string();
    if (out.count(id)) throw DataError("duplicate model id '" + id + "'");
    out.emplace(id, SessionModel{id, std::make_shared<const BayesianNetwork>(load_network(m)), m});
  }
  return out;
}

int run_serve(const ServeArgs& a) {
  if (a.models_dir.empty() && a.models.empty()) throw UsageError("give --model or --models-dir");
  ModelRegistry registry;
  registry.replace(load_models(a));
  DiagnosisServer server(registry, {a.host, a.port, a.cors});
  const int port = server.bind();
  std::cout << "serving " << registry.snapshot()->size() << " model(s) on http://" << a.host << ":" << port
            << std::endl;

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::signal(SIGHUP, [](int) { g_reload = true; });
  std::thread worker([&] { server.run(); });
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (g_reload.exchange(false)) {
      try {
        registry.replace(load_models(a));
        std::cerr << "reloaded " << registry.snapshot()->size() << " model(s)\n";
      } catch (const std::exception& ex) {
        std::cerr << "reload failed, keeping previous models: " << ex.what() << "\n";
      }
    }
  }
  server.stop();
  worker.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian network diagnosis and prediction of cloud QoS"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse a benchmark CSV into a discretized dataset");
  c_ingest->add_option("-i,--input", ingest.input, "Benchmark CSV")->required();
  c_ingest->add_option("-o,--output", ingest.output, "Dataset file (JSON lines, plus <file>.schema.json)")
      ->required();
  c_ingest->add_option("-c,--config", ingest.config, "Ingest config JSON (column mapping, aliases)")
      ->envname("QOSBN_CONFIG");
  c_ingest->add_option("--presets", ingest.presets, "Directory of discretization spec files, one per benchmark");
  c_ingest->add_option("--tod-bins", ingest.tod_bins, "Time-of-day bins per day (divides 24; default 4)");
  c_ingest->add_option("--range", ingest.policy, "Out-of-range QoS values: clamp or reject")
      ->capture_default_str();
  c_ingest->add_option("--summary", ingest.summary, "Write summary statistics here");
  c_ingest->add_option("--rejections", ingest.rejections, "Write rejected rows (JSON lines) here");

  DiscretizeArgs disc;
  auto* c_disc = app.add_subcommand("discretize", "Print a preset or derive bins from raw values");
  c_disc->add_option("--preset", disc.preset, "Preset name: cpu, compile, memory, oltp, io");
  c_disc->add_option("--values", disc.values, "File with one raw value per line");
  c_disc->add_option("--bins", disc.bins, "Target bin count for --values")->capture_default_str();
  c_disc->add_option("--variable", disc.variable, "Variable id of the result")->capture_default_str();
  c_disc->add_option("-o,--output", disc.output, "Write the bin spec JSON here");
  c_disc->add_option("--assign", disc.assign, "Print the state of each value under the bins");

  LearnArgs learn;
  auto* c_learn = app.add_subcommand("learn", "Build a structure and fit its parameters by EM");
  c_learn->add_option("-d,--data", learn.data, "Dataset file")->required();
  c_learn->add_option("-o,--output", learn.output, "Network JSON")->required();
  c_learn->add_option("-s,--structure", learn.structure, "nbn, tan, nor or cbn")->capture_default_str();
  c_learn->add_option("--structure-file", learn.structure_file, "Structure JSON (overrides --structure)");
  c_learn->add_option("--features", learn.features, "Feature variables (default: all)");
  c_learn->add_option("--benchmark", learn.benchmark, "Learn on one benchmark's records only");
  c_learn->add_option("--presets", learn.presets, "Directory of discretization spec files");
  c_learn->add_option("--trace", learn.trace, "Write the EM objective trace here");
  learn.em.attach(c_learn);

  DiagnoseArgs diag;
  auto* c_diag = app.add_subcommand(
      "diagnose",
      "Posterior of query variables given evidence.\n"
      "  --evidence var=state   hard evidence; splits at the first '=' so labels may hold ',' or '='\n"
      "  --soft var=p1,p2,...   likelihood vector, one number per state in model order\n"
      "Quote arguments containing spaces, e.g. --evidence \"qos_value=11 to 20\".");
  c_diag->add_option("-m,--model", diag.model, "Network JSON")->required();
  c_diag->add_option("-e,--evidence", diag.evidence, "Hard evidence var=state (repeatable)");
  c_diag->add_option("--soft", diag.soft, "Soft evidence var=p1,p2,... (repeatable)");
  c_diag->add_option("-q,--query", diag.query, "Query variables (default: all unobserved)");
  c_diag->add_flag("--json", diag.json_out, "Print the service's JSON response body");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Most probable class state for every record");
  c_pred->add_option("-m,--model", pred.model, "Network JSON")->required();
  c_pred->add_option("-d,--data", pred.data, "Dataset file")->required();
  c_pred->add_option("-o,--output", pred.output, "Write predictions (JSON lines) here");
  c_pred->add_option("--target", pred.target, "Class variable")->capture_default_str();
  c_pred->add_option("--benchmark", pred.benchmark, "Predict one benchmark's records only");
  c_pred->add_option("--presets", pred.presets, "Directory of discretization spec files");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "k-fold cross-validated prediction accuracy");
  c_eval->add_option("-d,--data", eval.data, "Dataset file")->required();
  c_eval->add_option("-s,--structure", eval.structures, "Structure kinds (repeatable)")->capture_default_str();
  c_eval->add_option("--structure-file", eval.structure_file, "Structure JSON (overrides --structure)");
  c_eval->add_option("--benchmark", eval.benchmarks, "Benchmarks to evaluate (default: all present)");
  c_eval->add_flag("--pooled", eval.pooled, "Evaluate the whole dataset as one slice");
  c_eval->add_option("--presets", eval.presets, "Directory of discretization spec files");
  c_eval->add_option("-k,--k", eval.k, "Number of folds")->capture_default_str();
  c_eval->add_option("--seed", eval.seed, "Fold shuffle seed")->capture_default_str();
  c_eval->add_option("--seeds", eval.seeds, "Repeat with this many consecutive seeds and report the spread")
      ->capture_default_str();
  c_eval->add_option("-o,--output", eval.output, "Write the JSON report here");
  c_eval->add_option("--table", eval.table, "Write the accuracy table here");
  eval.em.attach(c_eval);

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "HTTP diagnosis service (SIGHUP reloads models)");
  c_serve->add_option("--model", serve.models, "Network JSON, id = file stem (repeatable)");
  c_serve->add_option("--models-dir", serve.models_dir, "Directory of network JSON files");
  c_serve->add_option("--host", serve.host, "Bind address")->capture_default_str();
  c_serve->add_option("--port", serve.port, "Port, 0 for any free port")->capture_default_str();
  c_serve->add_flag("--cors", serve.cors, "Allow cross-origin requests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c_ingest->parsed()) return run_ingest(ingest);
    if (c_disc->parsed()) return run_discretize(disc);
    if (c_learn->parsed()) return run_learn(learn);
    if (c_diag->parsed()) return run_diagnose(diag);
    if (c_pred->parsed()) return run_predict(pred);
    if (c_eval->parsed()) return run_evaluate(eval);
    if (c_serve->parsed()) return run_serve(serve);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidEvidence& e) {
    std::cerr << "error: invalid evidence: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ImpossibleEvidence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitImpossible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
