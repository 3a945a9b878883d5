#pragma once

// Experiment drivers: alpha/beta sensitivity sweep, AGG/INDV/FED strategy
// comparison, and a centralized-vs-federated baseline at a fixed alpha.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedhumor/dataset.hpp"
#include "fedhumor/evaluation.hpp"
#include "fedhumor/federation.hpp"
#include "fedhumor/features.hpp"
#include "fedhumor/labeling.hpp"

namespace fedhumor {

enum class ExperimentKind { sweep, strategies, baseline };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind experiment_kind_from_string(std::string_view name);

struct DataPaths {
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;
};

struct GroupSpec {
  std::string name;
  std::vector<PreferenceSpec> members;
};

/// Group 1 and Group 2 of the strategy comparison.
std::vector<GroupSpec> default_groups();

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::strategies;
  DataPaths data;
  std::vector<GroupSpec> groups = default_groups();  // strategies
  std::vector<double> alpha_grid = alpha_range(0.2, 2.0, 0.1);  // sweep
  std::vector<double> beta_grid = alpha_range(0.0, 2.0, 0.1);   // sweep
  double baseline_alpha = 1.0;
  std::vector<PreferenceSpec> baseline_population = group_two();
  FederationConfig federation;
  // Per-group clients per round; unset means every client each round.
  std::optional<int> clients_per_round;
  std::filesystem::path output_dir = "results";
  double subsample_fraction = 1.0;
  int threads = 1;

  /// Throws DomainError if the spec cannot run.
  void validate() const;
};

/// Relative paths in the JSON are resolved against `base_dir`.
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);


struct PreparedData {
  DatasetSplit train;
  DatasetSplit validation;
  DatasetSplit test;
  FeatureMatrix train_x;
  FeatureMatrix validation_x;
  FeatureMatrix test_x;
};

/// Loads a split from CSV, or from the JSON cache when the extension is .json.
DatasetSplit load_split(const std::filesystem::path& path, SplitKind kind);

/// Loads, rejects unrated records, subsamples and featurizes all three splits.
PreparedData prepare_data(const ExperimentSpec& spec);

/// A client population together with its validation and test truths.
struct ClientGroup {
  std::string name;
  std::vector<PopulationMember> members;
  std::vector<EvalClient> validation;
  std::vector<EvalClient> test;
};

ClientGroup build_group(const std::string& name, std::span<const PreferenceSpec> prefs,
                        const PreparedData& data, PriorPolicy policy);

struct SelectedModel {
  ModelParams params;
  int best_round = 0;
  double validation_f1 = 0.0;
  std::vector<RoundLog> logs;
};

/// Federated training; keeps the global model of the round with the highest
/// overall validation macro F1 under rescaled inference (earliest on ties).
SelectedModel train_federated(std::span<const FederatedClient> clients,
                              std::span<const EvalClient> validation,
                              const FeatureMatrix& validation_x, const FederationConfig& cfg,
                              const FederationOptions& options = {});

/// Centralized plain-NLL training on a pooled set. One "round" is
/// cfg.local_epochs epochs; after each, the model is scored on `validation`
/// with plain inference and the best round is kept.
SelectedModel train_centralized(const TrainingSet& pooled, std::span<const EvalClient> validation,
                                const FeatureMatrix& validation_x, const FederationConfig& cfg);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t positives = 0;  // training labels equal to 1
  int best_round = 0;
  MacroMetrics test;
};

struct SweepFailure {
  double alpha = 0.0;
  double beta = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
};

SweepResult run_sweep(const ExperimentSpec& spec, const PreparedData& data);

struct StrategyRow {
  std::string group;
  std::string strategy;  // AGG, INDV or FED
  MacroMetrics metrics;
  EvalReport report;
};

struct StrategiesResult {
  std::vector<StrategyRow> rows;
};

StrategiesResult run_strategies(const ExperimentSpec& spec, const PreparedData& data);

struct BaselineRow {
  std::string model;
  MacroMetrics metrics;
  int best_round = 0;
};

struct BaselineResult {
  std::vector<BaselineRow> rows;
  double test_positive_fraction = 0.0;
};

BaselineResult run_baseline(const ExperimentSpec& spec, const PreparedData& data);

/// Evaluates a saved checkpoint on the test split for one client group.
EvalReport run_eval(const ExperimentSpec& spec, const PreparedData& data,
                    const ModelParams& params, const std::string& group_name,
                    InferenceMode mode);

/// "12.34" for 0.12345.
std::string format_percent(double fraction);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_strategies_csv(std::ostream& out, const StrategiesResult& result);
void write_baseline_csv(std::ostream& out, const BaselineResult& result);

nlohmann::json to_json(const SweepResult& result);
nlohmann::json to_json(const StrategiesResult& result);
nlohmann::json to_json(const BaselineResult& result);

/// Runs spec.kind, writes its CSV and JSON bundle into spec.output_dir and
/// returns a process exit code (nonzero if any sweep cell failed).
int run_experiment(const ExperimentSpec& spec);

}  // namespace fedhumor
