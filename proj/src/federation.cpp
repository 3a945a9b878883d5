#include "fedhumor/federation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "fedhumor/kernels.hpp"
#include "fedhumor/parallel.hpp"

namespace fedhumor {

namespace {

constexpr std::uint32_t kClientStream = 0xc11e;
constexpr std::uint32_t kSampleStream = 0x5a3e;
constexpr std::uint32_t kInitStream = 0x1417;
constexpr double kInitStddev = 0.01;

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag, std::uint32_t a = 0,
                       std::uint32_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                    a, b};
  return std::mt19937_64(seq);
}

void sum_pairwise(std::span<const ModelParams> locals, ModelParams& out) {
  if (locals.size() == 1) {
    out = locals.front();
    return;
  }
  const std::size_t half = locals.size() / 2;
  ModelParams right;
  sum_pairwise(locals.first(half), out);
  sum_pairwise(locals.subspan(half), right);
  simd::add(out.weights, right.weights, out.weights);
  out.bias[0] += right.bias[0];
  out.bias[1] += right.bias[1];
}

std::string checkpoint_name(int round_index) {
  std::ostringstream name;
  name << "round_" << std::setw(4) << std::setfill('0') << round_index << ".bin";
  return name.str();
}

}  // namespace

void FederationConfig::validate() const {
  if (rounds < 1) throw DomainError("rounds must be >= 1");
  if (clients_per_round < 1) throw DomainError("clients_per_round must be >= 1");
  if (local_epochs < 1) throw DomainError("local_epochs must be >= 1");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("learning_rate must be > 0");
  }
  if (feature_dim == 0) throw DomainError("feature_dim must be >= 1");
}

nlohmann::json to_json(const FederationConfig& cfg) {
  return nlohmann::json{{"rounds", cfg.rounds},
                        {"clients_per_round", cfg.clients_per_round},
                        {"local_epochs", cfg.local_epochs},
                        {"batch_size", cfg.batch_size},
                        {"learning_rate", cfg.learning_rate},
                        {"seed", cfg.seed},
                        {"feature_dim", cfg.feature_dim},
                        {"hash_seed", cfg.hash_seed},
                        {"clamp_degenerate_priors", cfg.clamp_degenerate_priors},
                        {"literal_eq3", cfg.literal_eq3}};
}

FederationConfig federation_config_from_json(const nlohmann::json& j, FederationConfig base) {
  if (!j.is_object()) throw DomainError("federation config must be a JSON object");
  try {
    base.rounds = j.value("rounds", base.rounds);
    base.clients_per_round = j.value("clients_per_round", base.clients_per_round);
    base.local_epochs = j.value("local_epochs", base.local_epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.seed = j.value("seed", base.seed);
    base.feature_dim = j.value("feature_dim", base.feature_dim);
    base.hash_seed = j.value("hash_seed", base.hash_seed);
    base.clamp_degenerate_priors = j.value("clamp_degenerate_priors", base.clamp_degenerate_priors);
    base.literal_eq3 = j.value("literal_eq3", base.literal_eq3);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("federation config: ") + e.what());
  }
  return base;
}

nlohmann::json to_json(const RoundLog& log) {
  return nlohmann::json{{"round", log.round_index},
                        {"selected_clients", log.selected_clients},
                        {"mean_client_loss", log.mean_client_loss},
                        {"checkpoint", log.checkpoint}};
}

RoundLog round_log_from_json(const nlohmann::json& j) {
  RoundLog log;
  log.round_index = j.at("round").get<int>();
  log.selected_clients = j.at("selected_clients").get<std::vector<int>>();
  log.mean_client_loss = j.at("mean_client_loss").get<double>();
  log.checkpoint = j.value("checkpoint", std::string{});
  return log;
}

void write_round_logs(const std::filesystem::path& path, std::span<const RoundLog> logs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& log : logs) out << to_json(log).dump() << '\n';
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::vector<RoundLog> read_round_logs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<RoundLog> logs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    logs.push_back(round_log_from_json(nlohmann::json::parse(line)));
  }
  return logs;
}

TrainingSet TrainingSet::from_view(const FeatureMatrix& features, const LabeledView& view) {
  TrainingSet set;
  set.features = &features;
  set.append(view);
  return set;
}

void TrainingSet::append(const LabeledView& view) {
  if (features == nullptr || view.size() != features->rows()) {
    throw DomainError("labels are not aligned with the feature rows");
  }
  rows.reserve(rows.size() + view.size());
  labels.reserve(labels.size() + view.size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    rows.push_back(static_cast<std::uint32_t>(i));
    labels.push_back(view.labels[i]);
  }
}

LocalResult train_sgd(ModelParams start, const TrainingSet& data, const LossConfig& loss,
                      const SgdSchedule& schedule, std::uint64_t shuffle_seed) {
  if (data.features == nullptr || data.size() == 0) throw DomainError("empty training set");
  if (schedule.epochs < 1 || schedule.batch_size < 1) {
    throw DomainError("epochs and batch_size must be >= 1");
  }
  if (start.dim != data.features->dim()) {
    throw DomainError("feature dimension does not match params");
  }

  std::mt19937_64 rng(shuffle_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  LocalResult result{std::move(start), 0.0};
  ModelParams grad = ModelParams::zeros(result.params.dim);
  std::vector<LabeledExample> batch;
  batch.reserve(static_cast<std::size_t>(schedule.batch_size));

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(schedule.batch_size));
      batch.clear();
      for (std::size_t j = begin; j < end; ++j) {
        const std::size_t e = order[j];
        batch.push_back({data.features->row(data.rows[e]), data.labels[e]});
      }
      const double batch_loss = loss_and_grad_into(result.params, batch, loss, grad);
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      apply_sgd_step(result.params, grad, schedule.learning_rate);
    }
    result.final_loss = epoch_loss / static_cast<double>(order.size());
  }
  if (!result.params.all_finite()) throw NumericError("parameters diverged to non-finite values");
  return result;
}

std::uint64_t client_seed(std::uint64_t seed, int round_index, int client_id) noexcept {
  return stream(seed, kClientStream, static_cast<std::uint32_t>(round_index),
                static_cast<std::uint32_t>(client_id))();
}

ModelParams initial_params(std::size_t dim, std::uint64_t seed) {
  auto rng = stream(seed, kInitStream);
  std::normal_distribution<double> normal(0.0, kInitStddev);
  ModelParams params = ModelParams::zeros(dim);
  for (double& w : params.weights) w = normal(rng);
  return params;
}

LossConfig client_loss(const ClientProfile& profile, const FederationConfig& cfg) {
  return LossConfig{cfg.literal_eq3 ? LossKind::scaled_literal : LossKind::scaled_nll,
                    profile.priors(), profile.beta};
}

LocalResult client_update(const ModelParams& global, const ClientProfile& profile,
                          const FeatureMatrix& train_features, const LabeledView& train_labels,
                          const FederationConfig& cfg, int round_index) {
  if (!(profile.prior_pos > 0.0 && profile.prior_pos < 1.0)) {
    const auto pos = count_positive(train_labels);
    throw DegeneratePriorError(pos, train_labels.size() - pos, profile.client_id);
  }
  const TrainingSet data = TrainingSet::from_view(train_features, train_labels);
  const SgdSchedule schedule{cfg.local_epochs, cfg.batch_size, cfg.learning_rate};
  return train_sgd(global, data, client_loss(profile, cfg), schedule,
                   client_seed(cfg.seed, round_index, profile.client_id));
}

FederatedClient::FederatedClient(ClientProfile profile, const FeatureMatrix& train_features,
                                 LabeledView train_labels)
    : profile_(profile), features_(&train_features), labels_(std::move(train_labels)) {
  if (labels_.size() != features_->rows()) {
    throw DomainError("client " + std::to_string(profile_.client_id) +
                      ": labels are not aligned with the feature rows");
  }
  if (labels_.size() == 0) {
    throw DomainError("client " + std::to_string(profile_.client_id) + ": no training data");
  }
}

LocalResult FederatedClient::update(const ModelParams& global, const FederationConfig& cfg,
                                    int round_index) const {
  return client_update(global, profile_, *features_, labels_, cfg, round_index);
}

std::vector<FederatedClient> make_clients(std::span<const PopulationMember> population,
                                          const FeatureMatrix& train_features) {
  std::vector<FederatedClient> clients;
  clients.reserve(population.size());
  for (const auto& member : population) {
    clients.emplace_back(member.profile, train_features, member.train_labels);
  }
  return clients;
}

ModelParams aggregate(std::span<const ModelParams> locals) {
  if (locals.empty()) throw DomainError("aggregate: no local models");
  for (const auto& p : locals) {
    if (!p.same_shape(locals.front())) throw DomainError("aggregate: shape mismatch");
  }
  ModelParams mean;
  sum_pairwise(locals, mean);
  const double inv = 1.0 / static_cast<double>(locals.size());
  if (locals.size() > 1) {
    simd::scale(inv, mean.weights);
    mean.bias[0] *= inv;
    mean.bias[1] *= inv;
  }
  return mean;
}

std::vector<int> sample_clients(int population_size, int k, int round_index, std::uint64_t seed) {
  if (k < 1 || k > population_size) {
    throw DomainError("cannot sample " + std::to_string(k) + " clients from a population of " +
                      std::to_string(population_size));
  }
  std::vector<int> ids(static_cast<std::size_t>(population_size));
  std::iota(ids.begin(), ids.end(), 0);
  if (k == population_size) return ids;
  auto rng = stream(seed, kSampleStream, static_cast<std::uint32_t>(round_index));
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(k));
  std::sample(ids.begin(), ids.end(), std::back_inserter(picked), k, rng);
  return picked;
}

ClientFailure::ClientFailure(int round_index, int client_id, std::exception_ptr cause,
                             const std::string& what)
    : Error("round " + std::to_string(round_index) + ", client " + std::to_string(client_id) +
            ": " + what),
      round_(round_index),
      client_(client_id),
      cause_(std::move(cause)) {}

FederationResult run_federation(std::span<const FederatedClient> clients,
                                const FederationConfig& cfg, const FederationOptions& options) {
  cfg.validate();
  if (clients.empty()) throw DomainError("run_federation: empty population");
  const int population = static_cast<int>(clients.size());
  if (cfg.clients_per_round > population) {
    throw DomainError("clients_per_round exceeds the population size");
  }
  for (const auto& c : clients) {
    if (c.feature_dim() != cfg.feature_dim) {
      throw DomainError("client feature dimension does not match feature_dim");
    }
  }
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  FederationResult result;
  result.final_global = initial_params(cfg.feature_dim, cfg.seed);
  result.logs.reserve(static_cast<std::size_t>(cfg.rounds));

  for (int round = 1; round <= cfg.rounds; ++round) {
    RoundLog log;
    log.round_index = round;
    log.selected_clients = sample_clients(population, cfg.clients_per_round, round, cfg.seed);

    std::vector<LocalResult> locals(log.selected_clients.size());
    const ModelParams& global = result.final_global;
    parallel_for(locals.size(), options.threads, [&](std::size_t i) {
      const int id = log.selected_clients[i];
      try {
        locals[i] = clients[static_cast<std::size_t>(id)].update(global, cfg, round);
      } catch (const std::exception& e) {
        throw ClientFailure(round, clients[static_cast<std::size_t>(id)].id(),
                            std::current_exception(), e.what());
      }
    });

    std::vector<ModelParams> params;
    params.reserve(locals.size());
    double loss_sum = 0.0;
    for (auto& local : locals) {
      loss_sum += local.final_loss;
      params.push_back(std::move(local.params));
    }
    log.mean_client_loss = loss_sum / static_cast<double>(locals.size());
    result.final_global = aggregate(params);

    if (options.checkpoint_dir) {
      const auto path = *options.checkpoint_dir / checkpoint_name(round);
      save_params(path, result.final_global);
      log.checkpoint = path.string();
    }
    if (options.on_round) options.on_round(log, result.final_global);
    result.logs.push_back(std::move(log));
  }
  return result;
}

}  // namespace fedhumor
