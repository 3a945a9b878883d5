#include "fedhumor/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fedhumor/errors.hpp"
#include "fedhumor/parallel.hpp"

namespace fedhumor {

namespace {

// Shuffle stream id for centralized (non-client) training.
constexpr int kCentralStream = -1;

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  return out;
}

std::vector<double> grid_from_json(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object()) {
    return alpha_range(j.at("from").get<double>(), j.at("to").get<double>(),
                       j.at("step").get<double>());
  }
  throw DomainError("grid must be an array or {from, to, step}");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<PreferenceSpec> members_from_json(const nlohmann::json& j,
                                              const std::filesystem::path& base) {
  if (j.is_string()) return load_population_spec(resolve(base, j.get<std::string>()));
  return population_spec_from_json(j);
}

FederationConfig with_clients(FederationConfig cfg, int k) {
  cfg.clients_per_round = k;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

EvalReport solo_report(std::vector<std::pair<int, ClientMetrics>> entries) {
  EvalReport report;
  for (auto& [id, m] : entries) report.per_client.emplace(id, m);
  report.overall = overall_metrics(report.per_client);
  return report;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::sweep:
      return "sweep";
    case ExperimentKind::strategies:
      return "strategies";
    case ExperimentKind::baseline:
      return "baseline";
  }
  return "strategies";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "sweep") return ExperimentKind::sweep;
  if (name == "strategies") return ExperimentKind::strategies;
  if (name == "baseline") return ExperimentKind::baseline;
  throw DomainError("unknown experiment kind '" + std::string(name) + "'");
}

std::vector<GroupSpec> default_groups() {
  return {GroupSpec{"Group 1", group_one()}, GroupSpec{"Group 2", group_two()}};
}

void ExperimentSpec::validate() const {
  federation.validate();
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw DomainError("subsample_fraction must lie in (0, 1]");
  }
  if (threads < 1) throw DomainError("threads must be >= 1");
  if (clients_per_round && *clients_per_round < 1) {
    throw DomainError("clients_per_round must be >= 1");
  }
  switch (kind) {
    case ExperimentKind::sweep:
      if (alpha_grid.empty() || beta_grid.empty()) throw DomainError("sweep grids must be non-empty");
      for (double a : alpha_grid) validate_alpha(a);
      for (double b : beta_grid) {
        if (!(b >= 0.0)) throw DomainError("beta grid values must be >= 0");
      }
      break;
    case ExperimentKind::strategies:
      if (groups.empty()) throw DomainError("strategies needs at least one group");
      for (const auto& g : groups) {
        if (g.members.empty()) throw DomainError("group '" + g.name + "' has no clients");
      }
      break;
    case ExperimentKind::baseline:
      validate_alpha(baseline_alpha);
      if (baseline_population.empty()) throw DomainError("baseline population is empty");
      break;
  }
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw DomainError("experiment config must be a JSON object");
  ExperimentSpec spec;
  try {
    spec.kind = experiment_kind_from_string(j.value("kind", std::string("strategies")));
    if (j.contains("data")) {
      const auto& d = j.at("data");
      spec.data.train = resolve(base_dir, d.at("train").get<std::string>());
      spec.data.validation = resolve(base_dir, d.at("validation").get<std::string>());
      spec.data.test = resolve(base_dir, d.at("test").get<std::string>());
    }
    if (j.contains("groups")) {
      spec.groups.clear();
      for (const auto& g : j.at("groups")) {
        spec.groups.push_back(
            GroupSpec{g.at("name").get<std::string>(), members_from_json(g.at("population"), base_dir)});
      }
    }
    if (j.contains("alpha_grid")) spec.alpha_grid = grid_from_json(j.at("alpha_grid"));
    if (j.contains("beta_grid")) spec.beta_grid = grid_from_json(j.at("beta_grid"));
    spec.baseline_alpha = j.value("baseline_alpha", spec.baseline_alpha);
    if (j.contains("baseline_population")) {
      spec.baseline_population = members_from_json(j.at("baseline_population"), base_dir);
    }
    if (j.contains("federation")) {
      spec.federation = federation_config_from_json(j.at("federation"));
    }
    if (j.contains("clients_per_round") && !j.at("clients_per_round").is_null()) {
      spec.clients_per_round = j.at("clients_per_round").get<int>();
    }
    if (j.contains("output_dir")) spec.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    spec.subsample_fraction = j.value("subsample_fraction", 1.0);
    spec.threads = j.value("threads", 1);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("experiment config: ") + e.what());
  }
  return spec;
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  auto groups = nlohmann::json::array();
  for (const auto& g : spec.groups) {
    groups.push_back({{"name", g.name}, {"population", to_json(std::span(g.members))}});
  }
  nlohmann::json j{{"kind", to_string(spec.kind)},
                   {"data",
                    {{"train", spec.data.train.string()},
                     {"validation", spec.data.validation.string()},
                     {"test", spec.data.test.string()}}},
                   {"groups", std::move(groups)},
                   {"alpha_grid", spec.alpha_grid},
                   {"beta_grid", spec.beta_grid},
                   {"baseline_alpha", spec.baseline_alpha},
                   {"baseline_population", to_json(std::span(spec.baseline_population))},
                   {"federation", to_json(spec.federation)},
                   {"output_dir", spec.output_dir.string()},
                   {"subsample_fraction", spec.subsample_fraction},
                   {"threads", spec.threads}};
  j["clients_per_round"] =
      spec.clients_per_round ? nlohmann::json(*spec.clients_per_round) : nlohmann::json(nullptr);
  return j;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("'" + path.string() + "': " + e.what());
  }
  return experiment_spec_from_json(j, path.parent_path());
}

DatasetSplit load_split(const std::filesystem::path& path, SplitKind kind) {
  if (path.extension() == ".json") return load_json_cache(path, kind);
  return parse_csv(path, kind);
}

PreparedData prepare_data(const ExperimentSpec& spec) {
  PreparedData data;
  const auto& cfg = spec.federation;
  auto load = [&](const std::filesystem::path& path, SplitKind kind) {
    DatasetSplit split = load_split(path, kind);
    require_rated(split);
    if (split.empty()) throw DomainError(std::string(to_string(kind)) + " split is empty");
    return subsample(split, spec.subsample_fraction, cfg.seed);
  };
  data.train = load(spec.data.train, SplitKind::train);
  data.validation = load(spec.data.validation, SplitKind::validation);
  data.test = load(spec.data.test, SplitKind::test);
  data.train_x = FeatureMatrix::from_split(data.train, cfg.feature_dim, cfg.hash_seed, spec.threads);
  data.validation_x =
      FeatureMatrix::from_split(data.validation, cfg.feature_dim, cfg.hash_seed, spec.threads);
  data.test_x = FeatureMatrix::from_split(data.test, cfg.feature_dim, cfg.hash_seed, spec.threads);
  return data;
}

ClientGroup build_group(const std::string& name, std::span<const PreferenceSpec> prefs,
                        const PreparedData& data, PriorPolicy policy) {
  ClientGroup group;
  group.name = name;
  group.members = make_population(prefs, data.train, policy);
  for (const auto& m : group.members) {
    const auto& p = m.profile;
    group.validation.push_back({p, generate_labels(data.validation, p.alpha, p.client_id)});
    group.test.push_back({p, generate_labels(data.test, p.alpha, p.client_id)});
  }
  return group;
}

SelectedModel train_federated(std::span<const FederatedClient> clients,
                              std::span<const EvalClient> validation,
                              const FeatureMatrix& validation_x, const FederationConfig& cfg,
                              const FederationOptions& options) {
  SelectedModel best;
  best.validation_f1 = -1.0;
  FederationOptions opts = options;
  opts.on_round = [&](const RoundLog& log, const ModelParams& global) {
    const double f1 =
        evaluate_population(global, validation, validation_x, InferenceMode::rescaled).overall.f1;
    if (f1 > best.validation_f1) {
      best.validation_f1 = f1;
      best.best_round = log.round_index;
      best.params = global;
    }
    if (options.on_round) options.on_round(log, global);
  };
  auto result = run_federation(clients, cfg, opts);
  best.logs = std::move(result.logs);
  return best;
}

SelectedModel train_centralized(const TrainingSet& pooled, std::span<const EvalClient> validation,
                                const FeatureMatrix& validation_x, const FederationConfig& cfg) {
  cfg.validate();
  SelectedModel best;
  best.validation_f1 = -1.0;
  ModelParams params = initial_params(cfg.feature_dim, cfg.seed);
  const LossConfig loss{LossKind::plain_nll, {}, 0.0};
  const SgdSchedule schedule{cfg.local_epochs, cfg.batch_size, cfg.learning_rate};
  for (int round = 1; round <= cfg.rounds; ++round) {
    auto local = train_sgd(std::move(params), pooled, loss, schedule,
                           client_seed(cfg.seed, round, kCentralStream));
    params = std::move(local.params);
    best.logs.push_back(RoundLog{round, {}, local.final_loss, {}});
    const double f1 =
        evaluate_population(params, validation, validation_x, InferenceMode::plain).overall.f1;
    if (f1 > best.validation_f1) {
      best.validation_f1 = f1;
      best.best_round = round;
      best.params = params;
    }
  }
  return best;
}

namespace {

std::string csv_quote(const std::string& field) {
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, const PreparedData& data) {
  struct Cell {
    double alpha;
    double beta;
  };
  std::vector<Cell> cells;
  for (double a : spec.alpha_grid) {
    for (double b : spec.beta_grid) cells.push_back({a, b});
  }
  std::vector<std::optional<SweepRow>> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  const auto cfg = with_clients(spec.federation, 1);

  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    const auto [alpha, beta] = cells[i];
    try {
      const PreferenceSpec pref{alpha, beta};
      const auto group =
          build_group("sweep", std::span(&pref, 1), data, spec.federation.prior_policy());
      const auto clients = make_clients(group.members, data.train_x);
      const auto model = train_federated(clients, group.validation, data.validation_x, cfg);
      const auto report =
          evaluate_population(model.params, group.test, data.test_x, InferenceMode::rescaled);
      rows[i] = SweepRow{alpha, beta, count_positive(group.members.front().train_labels),
                         model.best_round, report.overall};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  SweepResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (rows[i]) {
      result.rows.push_back(*rows[i]);
    } else {
      log_warning("sweep cell alpha=" + std::to_string(cells[i].alpha) +
                  " beta=" + std::to_string(cells[i].beta) + " failed: " + errors[i]);
      result.failures.push_back({cells[i].alpha, cells[i].beta, errors[i]});
    }
  }
  return result;
}

StrategiesResult run_strategies(const ExperimentSpec& spec, const PreparedData& data) {
  StrategiesResult result;
  const auto policy = spec.federation.prior_policy();
  for (const auto& group_spec : spec.groups) {
    const auto group = build_group(group_spec.name, group_spec.members, data, policy);
    const auto clients = make_clients(group.members, data.train_x);
    const int m = static_cast<int>(clients.size());
    const int k = std::min(spec.clients_per_round.value_or(m), m);
    auto ctx = [&](const char* strategy, const std::exception& e) {
      return Error(group_spec.name + " / " + strategy + ": " + e.what());
    };

    // AGG: every client's labels pooled centrally, no scaling anywhere.
    try {
      TrainingSet pooled;
      pooled.features = &data.train_x;
      for (const auto& member : group.members) pooled.append(member.train_labels);
      const auto model = train_centralized(pooled, group.validation, data.validation_x,
                                           spec.federation);
      auto report = evaluate_population(model.params, group.test, data.test_x, InferenceMode::plain);
      result.rows.push_back({group.name, "AGG", report.overall, std::move(report)});
    } catch (const Error& e) {
      throw ctx("AGG", e);
    }

    // INDV: one model per client, trained alone with its own scaling.
    try {
      std::vector<std::pair<int, ClientMetrics>> entries(clients.size());
      const auto solo_cfg = with_clients(spec.federation, 1);
      parallel_for(clients.size(), spec.threads, [&](std::size_t i) {
        const auto model = train_federated(std::span(&clients[i], 1),
                                           std::span(&group.validation[i], 1), data.validation_x,
                                           solo_cfg);
        const auto report = evaluate_population(model.params, std::span(&group.test[i], 1),
                                                data.test_x, InferenceMode::rescaled);
        entries[i] = *report.per_client.begin();
      });
      auto report = solo_report(std::move(entries));
      result.rows.push_back({group.name, "INDV", report.overall, std::move(report)});
    } catch (const Error& e) {
      throw ctx("INDV", e);
    }

    // FED: federated averaging with training-time scaling and rescaled inference.
    try {
      FederationOptions options;
      options.threads = spec.threads;
      options.checkpoint_dir = spec.output_dir / "checkpoints" / slug(group.name);
      const auto model = train_federated(clients, group.validation, data.validation_x,
                                         with_clients(spec.federation, k), options);
      write_round_logs(spec.output_dir / ("rounds_" + slug(group.name) + ".jsonl"), model.logs);
      auto report =
          evaluate_population(model.params, group.test, data.test_x, InferenceMode::rescaled);
      result.rows.push_back({group.name, "FED", report.overall, std::move(report)});
    } catch (const Error& e) {
      throw ctx("FED", e);
    }
  }
  return result;
}

BaselineResult run_baseline(const ExperimentSpec& spec, const PreparedData& data) {
  const auto policy = spec.federation.prior_policy();
  const PreferenceSpec target_pref{spec.baseline_alpha, std::nullopt};
  const auto target = build_group("target", std::span(&target_pref, 1), data, policy);

  BaselineResult result;
  result.test_positive_fraction =
      static_cast<double>(count_positive(target.test.front().truth)) /
      static_cast<double>(target.test.front().truth.size());

  {
    const auto pooled = TrainingSet::from_view(data.train_x, target.members.front().train_labels);
    const auto model = train_centralized(pooled, target.validation, data.validation_x,
                                         spec.federation);
    const auto report =
        evaluate_population(model.params, target.test, data.test_x, InferenceMode::plain);
    result.rows.push_back({"Centralized (no scaling)", report.overall, model.best_round});
  }
  {
    const auto group = build_group("population", spec.baseline_population, data, policy);
    const auto clients = make_clients(group.members, data.train_x);
    const int m = static_cast<int>(clients.size());
    const int k = std::min(spec.clients_per_round.value_or(m), m);
    FederationOptions options;
    options.threads = spec.threads;
    const auto model = train_federated(clients, target.validation, data.validation_x,
                                       with_clients(spec.federation, k), options);
    const auto report =
        evaluate_population(model.params, target.test, data.test_x, InferenceMode::rescaled);
    result.rows.push_back({"FedHumor", report.overall, model.best_round});
  }
  return result;
}

EvalReport run_eval(const ExperimentSpec& spec, const PreparedData& data,
                    const ModelParams& params, const std::string& group_name,
                    InferenceMode mode) {
  const auto it = std::find_if(spec.groups.begin(), spec.groups.end(),
                               [&](const GroupSpec& g) { return g.name == group_name; });
  if (it == spec.groups.end()) throw DomainError("no group named '" + group_name + "'");
  if (params.dim != data.test_x.dim()) {
    throw DomainError("checkpoint dimension does not match feature_dim");
  }
  const auto group = build_group(it->name, it->members, data, spec.federation.prior_policy());
  return evaluate_population(params, group.test, data.test_x, mode);
}

std::string format_percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * fraction;
  return s.str();
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "alpha,beta,positives,best_round,macro_p,macro_r,macro_f1\n";
  for (const auto& r : result.rows) {
    out << std::fixed << std::setprecision(1) << r.alpha << ',' << r.beta << std::defaultfloat
        << ',' << r.positives << ',' << r.best_round << ',' << format_percent(r.test.precision)
        << ',' << format_percent(r.test.recall) << ',' << format_percent(r.test.f1) << '\n';
  }
}

void write_strategies_csv(std::ostream& out, const StrategiesResult& result) {
  out << "group,strategy,precision,recall,f1\n";
  for (const auto& r : result.rows) {
    out << r.group << ',' << r.strategy << ',' << format_percent(r.metrics.precision) << ','
        << format_percent(r.metrics.recall) << ',' << format_percent(r.metrics.f1) << '\n';
  }
}

void write_baseline_csv(std::ostream& out, const BaselineResult& result) {
  out << "model,precision,recall,f1\n";
  for (const auto& r : result.rows) {
    out << r.model << ',' << format_percent(r.metrics.precision) << ','
        << format_percent(r.metrics.recall) << ',' << format_percent(r.metrics.f1) << '\n';
  }
}

nlohmann::json to_json(const SweepResult& result) {
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"beta", r.beta},
                    {"positives", r.positives},
                    {"best_round", r.best_round},
                    {"precision", r.test.precision},
                    {"recall", r.test.recall},
                    {"f1", r.test.f1}});
  }
  auto failures = nlohmann::json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"alpha", f.alpha}, {"beta", f.beta}, {"error", f.error}});
  }
  return nlohmann::json{{"rows", std::move(rows)}, {"failures", std::move(failures)}};
}

nlohmann::json to_json(const StrategiesResult& result) {
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"group", r.group},
                    {"strategy", r.strategy},
                    {"precision", r.metrics.precision},
                    {"recall", r.metrics.recall},
                    {"f1", r.metrics.f1},
                    {"report", to_json(r.report)}});
  }
  return nlohmann::json{{"rows", std::move(rows)}};
}

nlohmann::json to_json(const BaselineResult& result) {
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"model", r.model},
                    {"precision", r.metrics.precision},
                    {"recall", r.metrics.recall},
                    {"f1", r.metrics.f1},
                    {"best_round", r.best_round}});
  }
  return nlohmann::json{{"rows", std::move(rows)},
                        {"test_positive_fraction", result.test_positive_fraction}};
}

int run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.output_dir);
  const PreparedData data = prepare_data(spec);
  log_info("loaded train/validation/test = " + std::to_string(data.train.size()) + "/" +
           std::to_string(data.validation.size()) + "/" + std::to_string(data.test.size()));

  nlohmann::json bundle{{"config", to_json(spec)}};
  std::ostringstream csv;
  std::string csv_name;
  int exit_code = 0;

  switch (spec.kind) {
    case ExperimentKind::sweep: {
      const auto result = run_sweep(spec, data);
      write_sweep_csv(csv, result);
      csv_name = "sweep.csv";
      bundle["results"] = to_json(result);
      if (!result.failures.empty()) {
        std::ostringstream failures;
        failures << "alpha,beta,error\n";
        for (const auto& f : result.failures) {
          failures << std::fixed << std::setprecision(1) << f.alpha << ',' << f.beta << ','
                   << csv_quote(f.error) << '\n';
        }
        write_file(spec.output_dir / "sweep_failures.csv", failures.str());
        exit_code = 1;
      }
      break;
    }
    case ExperimentKind::strategies: {
      const auto result = run_strategies(spec, data);
      write_strategies_csv(csv, result);
      csv_name = "strategies.csv";
      bundle["results"] = to_json(result);
      break;
    }
    case ExperimentKind::baseline: {
      const auto result = run_baseline(spec, data);
      write_baseline_csv(csv, result);
      csv_name = "baseline.csv";
      bundle["results"] = to_json(result);
      break;
    }
  }

  write_file(spec.output_dir / csv_name, csv.str());
  write_file(spec.output_dir / (std::string(to_string(spec.kind)) + ".json"), bundle.dump(2) + "\n");
  log_info("wrote " + (spec.output_dir / csv_name).string());
  return exit_code;
}

}  // namespace fedhumor
