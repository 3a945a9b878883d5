#pragma once

// Federated averaging over simulated clients.
//
// The server side (run_federation, aggregate, sample_clients) only ever sees
// ModelParams and client ids. Labels live inside FederatedClient and are read
// solely by its update() call.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedhumor/errors.hpp"
#include "fedhumor/features.hpp"
#include "fedhumor/labeling.hpp"
#include "fedhumor/model.hpp"

namespace fedhumor {

struct FederationConfig {
  int rounds = 30;            // T
  int clients_per_round = 1;  // k
  int local_epochs = 1;       // E
  int batch_size = 32;        // B
  double learning_rate = 8.0; // eta; features are unit-norm, so large steps are stable
  std::uint64_t seed = 42;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::uint64_t hash_seed = kDefaultHashSeed;
  bool clamp_degenerate_priors = true;
  bool literal_eq3 = false;  // train on the label-independent two-class log sum

  /// Throws DomainError on any out-of-range field.
  void validate() const;
  PriorPolicy prior_policy() const noexcept {
    return clamp_degenerate_priors ? PriorPolicy::clamp : PriorPolicy::reject;
  }
};

nlohmann::json to_json(const FederationConfig& cfg);
/// Missing keys keep their defaults.
FederationConfig federation_config_from_json(const nlohmann::json& j,
                                             FederationConfig base = {});

struct RoundLog {
  int round_index = 0;  // 1-based
  std::vector<int> selected_clients;
  double mean_client_loss = 0.0;
  std::string checkpoint;  // path of the serialized global params, empty if not persisted

  bool operator==(const RoundLog&) const = default;
};

nlohmann::json to_json(const RoundLog& log);
RoundLog round_log_from_json(const nlohmann::json& j);
/// JSON lines, one RoundLog per line.
void write_round_logs(const std::filesystem::path& path, std::span<const RoundLog> logs);
std::vector<RoundLog> read_round_logs(const std::filesystem::path& path);

/// Examples referenced by row into a shared feature matrix. The same row may
/// appear several times with different labels (pooled corpora).
struct TrainingSet {
  const FeatureMatrix* features = nullptr;
  std::vector<std::uint32_t> rows;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return rows.size(); }
  static TrainingSet from_view(const FeatureMatrix& features, const LabeledView& view);
  void append(const LabeledView& view);
};

struct SgdSchedule {
  int epochs = 1;
  int batch_size = 32;
  double learning_rate = 8.0;
};

struct LocalResult {
  ModelParams params;
  double final_loss = 0.0;  // mean per-example loss over the last epoch
};

/// Mini-batch SGD from `start`: every epoch reshuffles the examples with a
/// generator seeded once from `shuffle_seed`, then walks them in batch_size
/// chunks (the last may be short). Learning rate 0 is allowed and leaves the
/// parameters untouched.
LocalResult train_sgd(ModelParams start, const TrainingSet& data, const LossConfig& loss,
                      const SgdSchedule& schedule, std::uint64_t shuffle_seed);

/// Shuffle seed of a client in a round; depends only on (seed, round, client).
std::uint64_t client_seed(std::uint64_t seed, int round_index, int client_id) noexcept;

/// Gaussian(0, 0.01) weights, zero bias.
ModelParams initial_params(std::size_t dim, std::uint64_t seed);

LossConfig client_loss(const ClientProfile& profile, const FederationConfig& cfg);

/// E epochs of local SGD starting from the global params, using the client's
/// own priors and beta in the training transform.
LocalResult client_update(const ModelParams& global, const ClientProfile& profile,
                          const FeatureMatrix& train_features, const LabeledView& train_labels,
                          const FederationConfig& cfg, int round_index);

/// A simulated device. Holds its labels privately.
class FederatedClient {
 public:
  FederatedClient(ClientProfile profile, const FeatureMatrix& train_features,
                  LabeledView train_labels);

  int id() const noexcept { return profile_.client_id; }
  const ClientProfile& profile() const noexcept { return profile_; }
  std::size_t feature_dim() const noexcept { return features_->dim(); }

  LocalResult update(const ModelParams& global, const FederationConfig& cfg,
                     int round_index) const;

 private:
  ClientProfile profile_;
  const FeatureMatrix* features_;
  LabeledView labels_;
};

std::vector<FederatedClient> make_clients(std::span<const PopulationMember> population,
                                          const FeatureMatrix& train_features);

/// Elementwise mean with pairwise summation. Throws DomainError when empty or
/// when shapes differ.
ModelParams aggregate(std::span<const ModelParams> locals);

/// k distinct ids from [0, population_size), uniform without replacement,
/// ascending, deterministic in (seed, round_index).
std::vector<int> sample_clients(int population_size, int k, int round_index, std::uint64_t seed);

/// A client failed inside a round. what() names the round and client.
class ClientFailure : public Error {
 public:
  ClientFailure(int round_index, int client_id, std::exception_ptr cause, const std::string& what);
  int round_index() const noexcept { return round_; }
  int client_id() const noexcept { return client_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  int round_;
  int client_;
  std::exception_ptr cause_;
};

using RoundObserver = std::function<void(const RoundLog&, const ModelParams&)>;

struct FederationOptions {
  std::optional<std::filesystem::path> checkpoint_dir;  // round_NNNN.bin per round
  RoundObserver on_round;
  int threads = 1;
};

struct FederationResult {
  ModelParams final_global;
  std::vector<RoundLog> logs;
};

/// T rounds of {sample k clients, local updates, aggregate}. Local updates of
/// a round may run concurrently; results are combined in selection order.
FederationResult run_federation(std::span<const FederatedClient> clients,
                                const FederationConfig& cfg, const FederationOptions& options = {});

}  // namespace fedhumor
