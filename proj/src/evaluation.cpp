#include "qosbn/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "qosbn/inference.hpp"

namespace qosbn {

using nlohmann::json;

std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == std::numeric_limits<std::uint64_t>::max()) return rng();
  const std::uint64_t range = bound + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (k > n)
    throw std::invalid_argument("cannot split " + std::to_string(n) + " records into " +
                                std::to_string(k) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[bounded_uniform(rng, i)]);
  FoldPlan plan{k, seed, std::vector<std::size_t>(n)};
  for (std::size_t p = 0; p < n; ++p) plan.assignment[order[p]] = p % k;
  return plan;
}

std::vector<std::vector<std::size_t>> FoldPlan::folds() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

std::size_t EvalReport::tested() const {
  std::size_t t = 0;
  for (const auto& row : confusion) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t EvalReport::correct() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) c += confusion[i][i];
  return c;
}

double EvalReport::accuracy() const {
  const auto t = tested();
  return t ? static_cast<double>(correct()) / static_cast<double>(t) : 0.0;
}

double EvalReport::mean_fold_accuracy() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : folds)
    if (!f.skipped) {
      sum += f.accuracy();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

EvalReport cross_validate(const StructureSpec& spec_in, const Dataset& data, const CvOptions& opt) {
  const std::size_t cls = data.require_column(spec_in.class_variable);
  const StructureSpec spec = restrict_structure(spec_in, data.variables);
  EvalReport report;
  report.structure = to_string(spec.kind);
  report.label = opt.label;
  report.k = opt.k;
  report.seed = opt.seed;
  report.states = data.variables[cls].states;
  const std::size_t c = report.states.size();
  report.confusion.assign(c, std::vector<std::size_t>(c, 0));

  const auto plan = make_folds(data.size(), opt.k, opt.seed);
  const auto folds = plan.folds();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldResult fr;
    fr.fold = f;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (plan.assignment[i] == f ? test : train).push_back(i);
    for (auto i : test) {
      if (data.rows[i][cls] == kMissing) ++report.unscored;
    }
    const bool any_class = std::any_of(test.begin(), test.end(),
                                       [&](std::size_t i) { return data.rows[i][cls] != kMissing; });
    if (!any_class) {
      fr.skipped = true;
      report.notices.push_back("fold " + std::to_string(f) + " has no observed class value; skipped");
      report.folds.push_back(fr);
      continue;
    }
    const Dataset train_ds = subset(data, train);
    const auto skeleton = build_structure(spec, train_ds);
    const auto fit = learn_em(skeleton, train_ds, opt.em).network;
    const InferenceEngine eng(fit);
    const auto binding = bind_columns(fit, data);
    const std::size_t target = fit.index_of(spec.class_variable);

    std::map<std::vector<int>, std::size_t> cache;
    for (auto i : test) {
      const int truth = data.rows[i][cls];
      if (truth == kMissing) continue;
      auto states = binding.translate(data.rows[i]);
      states[target] = kMissing;
      auto it = cache.find(states);
      if (it == cache.end()) {
        IndexedEvidence e;
        for (std::size_t v = 0; v < states.size(); ++v)
          if (states[v] != kMissing) e.hard[v] = static_cast<std::size_t>(states[v]);
        std::size_t pred;
        try {
          const auto post = eng.marginal(e, {target});
          pred = argmax_lowest(post.values());
        } catch (const ImpossibleEvidence&) {
          pred = argmax_lowest(eng.marginal({}, {target}).values());
          ++report.prior_fallbacks;
        }
        it = cache.emplace(states, pred).first;
      }
      // Network and dataset share the class labels, so indices agree.
      const std::size_t predicted = it->second;
      const auto t = static_cast<std::size_t>(truth);
      report.confusion[t][predicted]++;
      fr.tested++;
      if (predicted == t) fr.correct++;
    }
    report.folds.push_back(fr);
  }
  return report;
}

Aggregates aggregate_accuracy(const std::vector<EvalReport>& reports) {
  Aggregates a;
  if (reports.empty()) return a;
  std::map<std::string, std::pair<double, std::size_t>> by_label;
  std::size_t tested = 0, correct = 0;
  for (const auto& r : reports) {
    a.cell_mean += r.accuracy();
    auto& [sum, n] = by_label[r.label];
    sum += r.accuracy();
    ++n;
    tested += r.tested();
    correct += r.correct();
  }
  a.cell_mean /= static_cast<double>(reports.size());
  for (const auto& [label, sn] : by_label) a.benchmark_mean += sn.first / static_cast<double>(sn.second);
  a.benchmark_mean /= static_cast<double>(by_label.size());
  a.record_weighted = tested ? static_cast<double>(correct) / static_cast<double>(tested) : 0.0;
  return a;
}

double overall_accuracy(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("overall accuracy needs at least one report");
  return 100.0 * aggregate_accuracy(reports).cell_mean;
}

json report_to_json(const EvalReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds)
    folds.push_back({{"fold", f.fold},
                     {"tested", f.tested},
                     {"correct", f.correct},
                     {"accuracy", f.accuracy()},
                     {"skipped", f.skipped}});
  return {{"structure", r.structure},
          {"label", r.label},
          {"k", r.k},
          {"seed", r.seed},
          {"states", r.states},
          {"confusion", r.confusion},
          {"folds", folds},
          {"tested", r.tested()},
          {"correct", r.correct()},
          {"accuracy", r.accuracy()},
          {"mean_fold_accuracy", r.mean_fold_accuracy()},
          {"unscored", r.unscored},
          {"prior_fallbacks", r.prior_fallbacks},
          {"notices", r.notices}};
}

json reports_to_json(const std::vector<EvalReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  json out{{"reports", arr}};
  if (!reports.empty()) {
    const auto a = aggregate_accuracy(reports);
    out["overall"] = {{"cell_mean", a.cell_mean},
                      {"benchmark_mean", a.benchmark_mean},
                      {"record_weighted", a.record_weighted}};
  }
  return out;
}

std::string accuracy_table(const std::vector<EvalReport>& reports) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& r : reports) {
    if (std::find(rows.begin(), rows.end(), r.structure) == rows.end()) rows.push_back(r.structure);
    if (std::find(cols.begin(), cols.end(), r.label) == cols.end()) cols.push_back(r.label);
    cell[{r.structure, r.label}] = 100.0 * r.accuracy();
  }
  std::ostringstream os;
  os << std::left << std::setw(10) << "structure";
  for (const auto& c : cols) os << std::right << std::setw(12) << (c.empty() ? "accuracy" : c);
  os << '\n' << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    std::string upper = r;
    for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    os << std::left << std::setw(10) << upper;
    for (const auto& c : cols) {
      auto it = cell.find({r, c});
      os << std::right << std::setw(12);
      if (it == cell.end())
        os << "-";
      else
        os << it->second;
    }
    os << '\n';
  }
  if (!reports.empty()) {
    const auto a = aggregate_accuracy(reports);
    os << "overall: cell mean " << 100.0 * a.cell_mean << "%, benchmark mean "
       << 100.0 * a.benchmark_mean << "%, record weighted " << 100.0 * a.record_weighted << "%\n";
  }
  return os.str();
}

}  // namespace qosbn
