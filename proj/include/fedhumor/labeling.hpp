#pragma once

// Simulated clients: per-client binary labels from a funniness threshold,
// empirical class priors and the scaling exponent policy.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedhumor/dataset.hpp"

namespace fedhumor {

/// Class frequencies indexed by label: [0] = non-humorous, [1] = humorous.
struct ClassPriors {
  double negative = 0.5;
  double positive = 0.5;

  double operator[](int label) const noexcept { return label == 1 ? positive : negative; }
  bool operator==(const ClassPriors&) const = default;
};

struct ClientProfile {
  int client_id = 0;
  double alpha = 1.0;  // funniness threshold
  double beta = 1.0;   // scaling exponent
  double prior_pos = 0.5;
  double prior_neg = 0.5;  // always 1 - prior_pos

  ClassPriors priors() const noexcept { return {prior_neg, prior_pos}; }
  bool operator==(const ClientProfile&) const = default;
};

/// Labels aligned index-for-index with the records of the split they came from.
struct LabeledView {
  int client_id = 0;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool operator==(const LabeledView&) const = default;
};

enum class PriorPolicy {
  clamp,   // single-class views get add-one-smoothed priors and a warning
  reject,  // single-class views throw DegeneratePriorError
};

/// Throws DomainError unless alpha lies in (0, 3).
void validate_alpha(double alpha);

/// labels[i] = 1 iff records[i].mean_grade >= alpha.
LabeledView generate_labels(const DatasetSplit& split, double alpha, int client_id = 0);

std::size_t count_positive(const LabeledView& view) noexcept;

/// Exact class frequencies; throws DegeneratePriorError for single-class views.
ClassPriors empirical_priors(const LabeledView& view);

/// empirical_priors, except that under PriorPolicy::clamp a single-class view
/// is clamped to [1/(n+2), 1-1/(n+2)].
ClassPriors resolve_priors(const LabeledView& view, PriorPolicy policy);

/// 0.1 outside [0.5, 1.5], 1.0 inside.
double default_beta(double alpha);

struct PreferenceSpec {
  double alpha = 1.0;
  std::optional<double> beta;  // default_beta(alpha) when absent

  bool operator==(const PreferenceSpec&) const = default;
};

struct PopulationMember {
  ClientProfile profile;
  LabeledView train_labels;
};

/// One member per spec entry, client ids 0..n-1 in spec order.
std::vector<PopulationMember> make_population(std::span<const PreferenceSpec> spec,
                                              const DatasetSplit& split,
                                              PriorPolicy policy = PriorPolicy::clamp);

/// lo, lo+step, ..., hi (inclusive), each value rounded to 10 decimals so that
/// grid points compare equal to the same literal written by hand.
std::vector<double> alpha_range(double lo, double hi, double step);

std::vector<PreferenceSpec> preferences_from_alphas(std::span<const double> alphas);

/// Three clients: easily amused, neutral, hardly amused.
std::vector<PreferenceSpec> group_one();
/// Eighteen clients, alpha 0.2 to 1.9 in steps of 0.1.
std::vector<PreferenceSpec> group_two();

/// Population spec: a JSON array of {"alpha": a, "beta": b?} objects.
std::vector<PreferenceSpec> population_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(std::span<const PreferenceSpec> spec);
std::vector<PreferenceSpec> load_population_spec(const std::filesystem::path& path);

}  // namespace fedhumor
