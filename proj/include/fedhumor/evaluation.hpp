#pragma once

// Federated inference with per-client prior rescaling, and macro metrics.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedhumor/features.hpp"
#include "fedhumor/labeling.hpp"
#include "fedhumor/model.hpp"

namespace fedhumor {

/// Positive class = humorous (label 1).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const MacroMetrics&) const = default;
};

struct ClientMetrics {
  double alpha = 0.0;
  double beta = 0.0;
  ConfusionMatrix confusion;
  MacroMetrics macro;

  bool operator==(const ClientMetrics&) const = default;
};

struct EvalReport {
  std::map<int, ClientMetrics> per_client;
  MacroMetrics overall;

  bool operator==(const EvalReport&) const = default;
};

enum class InferenceMode {
  rescaled,  // argmax of scale_infer(forward(x), client priors, client beta)
  plain,     // argmax of forward(x)
};

/// Class probabilities of the global model for every feature row.
std::vector<Probabilities> predict_probabilities(const ModelParams& params,
                                                 const FeatureMatrix& features);

int decide(const Probabilities& prob, const ClientProfile& profile, InferenceMode mode);

std::vector<std::uint8_t> decide_all(std::span<const Probabilities> probs,
                                     const ClientProfile& profile, InferenceMode mode);

std::vector<std::uint8_t> predict_client(const ModelParams& params, const ClientProfile& profile,
                                         const FeatureMatrix& features,
                                         InferenceMode mode = InferenceMode::rescaled);

/// Throws DomainError on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth);

/// Mean over the two classes of precision, recall and F1. A per-class
/// fraction whose denominator is zero contributes 0.
MacroMetrics macro_metrics(const ConfusionMatrix& c) noexcept;

/// Unweighted mean of per-client macro metrics.
MacroMetrics overall_metrics(const std::map<int, ClientMetrics>& per_client);

struct EvalClient {
  ClientProfile profile;
  LabeledView truth;  // the client's own labels on the evaluated split
};

/// Throws DomainError for an empty population or misaligned labels.
EvalReport evaluate_population(const ModelParams& params, std::span<const EvalClient> population,
                               const FeatureMatrix& features,
                               InferenceMode mode = InferenceMode::rescaled);

/// Same, from probabilities computed once for the split.
EvalReport evaluate_probabilities(std::span<const Probabilities> probs,
                                  std::span<const EvalClient> population, InferenceMode mode);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Columns client_id,alpha,beta,tp,fp,fn,tn,macro_p,macro_r,macro_f1, then a
/// summary row "overall". Metrics are printed as percentages with 2 decimals.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace fedhumor
