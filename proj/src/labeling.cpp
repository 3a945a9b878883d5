#include "fedhumor/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fedhumor/errors.hpp"

namespace fedhumor {

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 3.0)) {
    std::ostringstream msg;
    msg << "alpha " << alpha << " outside (0, 3)";
    throw DomainError(msg.str());
  }
}

LabeledView generate_labels(const DatasetSplit& split, double alpha, int client_id) {
  validate_alpha(alpha);
  if (split.empty()) throw DomainError("generate_labels: empty split");
  LabeledView view;
  view.client_id = client_id;
  view.labels.reserve(split.size());
  for (const auto& rec : split.records) {
    view.labels.push_back(rec.mean_grade >= alpha ? 1 : 0);
  }
  return view;
}

std::size_t count_positive(const LabeledView& view) noexcept {
  return static_cast<std::size_t>(std::count(view.labels.begin(), view.labels.end(), 1));
}

ClassPriors empirical_priors(const LabeledView& view) {
  const std::size_t n = view.size();
  const std::size_t pos = count_positive(view);
  if (n == 0 || pos == 0 || pos == n) throw DegeneratePriorError(pos, n - pos, view.client_id);
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return {1.0 - p, p};
}

ClassPriors resolve_priors(const LabeledView& view, PriorPolicy policy) {
  try {
    return empirical_priors(view);
  } catch (const DegeneratePriorError& e) {
    if (policy == PriorPolicy::reject || view.size() == 0) throw;
    const double n = static_cast<double>(view.size());
    const double floor = 1.0 / (n + 2.0);
    const double p = e.positives() == 0 ? floor : 1.0 - floor;
    log_warning(std::string(e.what()) + "; clamping P(y=1) to " + std::to_string(p));
    return {1.0 - p, p};
  }
}

double default_beta(double alpha) {
  validate_alpha(alpha);
  return (alpha < 0.5 || alpha > 1.5) ? 0.1 : 1.0;
}

std::vector<PopulationMember> make_population(std::span<const PreferenceSpec> spec,
                                              const DatasetSplit& split, PriorPolicy policy) {
  std::vector<PopulationMember> population;
  population.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& entry = spec[i];
    const int id = static_cast<int>(i);
    PopulationMember member;
    member.train_labels = generate_labels(split, entry.alpha, id);
    const double beta = entry.beta.value_or(default_beta(entry.alpha));
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
      throw DomainError("client " + std::to_string(id) + ": beta must be finite and >= 0");
    }
    const ClassPriors priors = resolve_priors(member.train_labels, policy);
    member.profile = ClientProfile{id, entry.alpha, beta, priors.positive, priors.negative};
    population.push_back(std::move(member));
  }
  return population;
}

std::vector<double> alpha_range(double lo, double hi, double step) {
  if (!(step > 0.0)) throw DomainError("alpha_range: step must be positive");
  std::vector<double> values;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    values.push_back(std::round(v * 1e10) / 1e10);
  }
  return values;
}

std::vector<PreferenceSpec> preferences_from_alphas(std::span<const double> alphas) {
  std::vector<PreferenceSpec> spec;
  spec.reserve(alphas.size());
  for (double a : alphas) spec.push_back(PreferenceSpec{a, std::nullopt});
  return spec;
}

std::vector<PreferenceSpec> group_one() {
  const double alphas[] = {0.3, 0.9, 1.8};
  return preferences_from_alphas(alphas);
}

std::vector<PreferenceSpec> group_two() {
  const auto alphas = alpha_range(0.2, 1.9, 0.1);
  return preferences_from_alphas(alphas);
}

std::vector<PreferenceSpec> population_spec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DomainError("population spec must be a JSON array");
  std::vector<PreferenceSpec> spec;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("alpha") || !item.at("alpha").is_number()) {
      throw DomainError("population entry needs a numeric 'alpha'");
    }
    PreferenceSpec entry;
    entry.alpha = item.at("alpha").get<double>();
    validate_alpha(entry.alpha);
    if (item.contains("beta") && !item.at("beta").is_null()) {
      if (!item.at("beta").is_number()) throw DomainError("population entry 'beta' must be numeric");
      entry.beta = item.at("beta").get<double>();
    }
    spec.push_back(entry);
  }
  return spec;
}

nlohmann::json to_json(std::span<const PreferenceSpec> spec) {
  auto arr = nlohmann::json::array();
  for (const auto& entry : spec) {
    nlohmann::json item{{"alpha", entry.alpha}};
    if (entry.beta) item["beta"] = *entry.beta;
    arr.push_back(std::move(item));
  }
  return arr;
}

std::vector<PreferenceSpec> load_population_spec(const std::filesystem::path& path) {
  try {
    return population_spec_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace fedhumor
