#include "fedhumor/evaluation.hpp"

#include <iomanip>
#include <ostream>

#include "fedhumor/errors.hpp"

namespace fedhumor {

namespace {

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json to_json(const MacroMetrics& m) {
  return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

MacroMetrics metrics_from_json(const nlohmann::json& j) {
  return MacroMetrics{j.at("precision").get<double>(), j.at("recall").get<double>(),
                      j.at("f1").get<double>()};
}

}  // namespace

std::vector<Probabilities> predict_probabilities(const ModelParams& params,
                                                 const FeatureMatrix& features) {
  std::vector<Probabilities> probs;
  probs.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) probs.push_back(forward(params, features.row(i)));
  return probs;
}

int decide(const Probabilities& prob, const ClientProfile& profile, InferenceMode mode) {
  if (mode == InferenceMode::plain) return argmax(prob);
  return argmax(scale_infer(prob, profile.priors(), profile.beta));
}

std::vector<std::uint8_t> decide_all(std::span<const Probabilities> probs,
                                     const ClientProfile& profile, InferenceMode mode) {
  std::vector<std::uint8_t> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(static_cast<std::uint8_t>(decide(p, profile, mode)));
  return out;
}

std::vector<std::uint8_t> predict_client(const ModelParams& params, const ClientProfile& profile,
                                         const FeatureMatrix& features, InferenceMode mode) {
  if (features.rows() == 0) throw DomainError("predict_client: no instances");
  const auto probs = predict_probabilities(params, features);
  return decide_all(probs, profile, mode);
}

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw DomainError("confusion: length mismatch");
  if (predicted.empty()) throw DomainError("confusion: no instances");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MacroMetrics macro_metrics(const ConfusionMatrix& c) noexcept {
  MacroMetrics m;
  m.precision = 0.5 * (ratio(c.tp, c.tp + c.fp) + ratio(c.tn, c.tn + c.fn));
  m.recall = 0.5 * (ratio(c.tp, c.tp + c.fn) + ratio(c.tn, c.tn + c.fp));
  m.f1 = ratio(c.tp, 2 * c.tp + c.fn + c.fp) + ratio(c.tn, 2 * c.tn + c.fn + c.fp);
  return m;
}

MacroMetrics overall_metrics(const std::map<int, ClientMetrics>& per_client) {
  if (per_client.empty()) throw DomainError("overall_metrics: no clients");
  MacroMetrics sum;
  for (const auto& [id, m] : per_client) {
    sum.precision += m.macro.precision;
    sum.recall += m.macro.recall;
    sum.f1 += m.macro.f1;
  }
  const double n = static_cast<double>(per_client.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

EvalReport evaluate_probabilities(std::span<const Probabilities> probs,
                                  std::span<const EvalClient> population, InferenceMode mode) {
  if (population.empty()) throw DomainError("evaluate_population: empty population");
  EvalReport report;
  for (const auto& client : population) {
    if (client.truth.size() != probs.size()) {
      throw DomainError("client " + std::to_string(client.profile.client_id) +
                        ": labels are not aligned with the evaluated split");
    }
    const auto predicted = decide_all(probs, client.profile, mode);
    ClientMetrics m;
    m.alpha = client.profile.alpha;
    m.beta = client.profile.beta;
    m.confusion = confusion(predicted, client.truth.labels);
    m.macro = macro_metrics(m.confusion);
    if (!report.per_client.emplace(client.profile.client_id, m).second) {
      throw DomainError("duplicate client id in evaluation population");
    }
  }
  report.overall = overall_metrics(report.per_client);
  return report;
}

EvalReport evaluate_population(const ModelParams& params, std::span<const EvalClient> population,
                               const FeatureMatrix& features, InferenceMode mode) {
  const auto probs = predict_probabilities(params, features);
  return evaluate_probabilities(probs, population, mode);
}

nlohmann::json to_json(const EvalReport& report) {
  auto clients = nlohmann::json::array();
  for (const auto& [id, m] : report.per_client) {
    clients.push_back({{"client_id", id},
                       {"alpha", m.alpha},
                       {"beta", m.beta},
                       {"tp", m.confusion.tp},
                       {"fp", m.confusion.fp},
                       {"fn", m.confusion.fn},
                       {"tn", m.confusion.tn},
                       {"macro", to_json(m.macro)}});
  }
  return nlohmann::json{{"per_client", std::move(clients)}, {"overall", to_json(report.overall)}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport report;
  try {
    for (const auto& c : j.at("per_client")) {
      ClientMetrics m;
      m.alpha = c.at("alpha").get<double>();
      m.beta = c.at("beta").get<double>();
      m.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                     c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
      m.macro = metrics_from_json(c.at("macro"));
      report.per_client.emplace(c.at("client_id").get<int>(), m);
    }
    report.overall = metrics_from_json(j.at("overall"));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed evaluation report: ") + e.what());
  }
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "client_id,alpha,beta,tp,fp,fn,tn,macro_p,macro_r,macro_f1\n";
  out << std::fixed;
  for (const auto& [id, m] : report.per_client) {
    out << id << ',' << std::setprecision(2) << m.alpha << ',' << m.beta << ',' << m.confusion.tp
        << ',' << m.confusion.fp << ',' << m.confusion.fn << ',' << m.confusion.tn << ','
        << 100.0 * m.macro.precision << ',' << 100.0 * m.macro.recall << ','
        << 100.0 * m.macro.f1 << '\n';
  }
  out << "overall,,,,,,," << 100.0 * report.overall.precision << ','
      << 100.0 * report.overall.recall << ',' << 100.0 * report.overall.f1 << '\n';
  out << std::defaultfloat;
}

}  // namespace fedhumor
