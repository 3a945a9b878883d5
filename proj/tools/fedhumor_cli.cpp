// fedhumor: command-line driver for ingestion, experiments and evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedhumor/dataset.hpp"
#include "fedhumor/errors.hpp"
#include "fedhumor/experiments.hpp"
#include "fedhumor/kernels.hpp"
#include "fedhumor/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fedhumor;

namespace {

struct CommonFlags {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<double> subsample;
  std::optional<int> threads;
  std::optional<int> rounds;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", flags.output, "Output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "Random seed (overrides config)");
  cmd->add_option("--subsample", flags.subsample, "Fraction of each split to use, in (0, 1]");
  cmd->add_option("-j,--threads", flags.threads, "Worker threads");
  cmd->add_option("--rounds", flags.rounds, "Federation rounds (overrides config)");
}

ExperimentSpec load_spec(const CommonFlags& flags, std::optional<ExperimentKind> kind) {
  ExperimentSpec spec = load_experiment_spec(flags.config);
  if (kind) spec.kind = *kind;
  if (!flags.output.empty()) spec.output_dir = flags.output;
  if (flags.seed) spec.federation.seed = *flags.seed;
  if (flags.subsample) spec.subsample_fraction = *flags.subsample;
  if (flags.threads) spec.threads = *flags.threads;
  if (flags.rounds) spec.federation.rounds = *flags.rounds;
  return spec;
}

void print_stats(const DatasetSplit& split) {
  if (split.empty()) {
    std::cout << nlohmann::json{{"split", to_string(split.kind)}, {"count", 0}}.dump() << '\n';
    return;
  }
  const auto stats = split_stats(split);
  nlohmann::json j{{"split", to_string(split.kind)},
                   {"count", stats.count},
                   {"mean_rating", stats.mean_rating},
                   {"min_rating", stats.min_rating},
                   {"max_rating", stats.max_rating}};
  std::cout << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized humor recognition with federated averaging (simulator)"};
  app.require_subcommand(1);
  bool scalar = false;
  app.add_flag("--scalar-kernels", scalar, "Use the scalar reference kernels instead of SIMD");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse a CSV split, print its statistics, optionally cache it as JSON");
  std::string ingest_input;
  std::string ingest_split = "train";
  std::string ingest_cache;
  ingest->add_option("input", ingest_input, "CSV file (id,original,edit,grades,meanGrade)")->required();
  ingest->add_option("-s,--split", ingest_split, "train, validation or test");
  ingest->add_option("--cache", ingest_cache, "Write the canonical JSON cache here");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with the dataset's schema");
  std::string synth_dir;
  SyntheticCorpusConfig synth_cfg;
  synth->add_option("output_dir", synth_dir, "Directory for train.csv, dev.csv, test.csv")->required();
  synth->add_option("--train", synth_cfg.train, "Training rows");
  synth->add_option("--validation", synth_cfg.validation, "Validation rows");
  synth->add_option("--test", synth_cfg.test, "Test rows");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");

  CommonFlags sweep_flags, strategies_flags, baseline_flags, eval_flags;
  auto* sweep = app.add_subcommand("sweep", "Alpha x beta sensitivity grid");
  add_common(sweep, sweep_flags);
  auto* strategies = app.add_subcommand("strategies", "AGG / INDV / FED comparison per client group");
  add_common(strategies, strategies_flags);
  auto* baseline = app.add_subcommand("baseline", "Centralized vs federated model at a fixed alpha");
  add_common(baseline, baseline_flags);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint on a client group's test labels");
  add_common(eval, eval_flags);
  std::string eval_checkpoint;
  std::string eval_group = "Group 2";
  std::string eval_mode = "rescaled";
  eval->add_option("--checkpoint", eval_checkpoint, "Model checkpoint (.bin)")->required()->check(CLI::ExistingFile);
  eval->add_option("--group", eval_group, "Group name from the config");
  eval->add_option("--mode", eval_mode, "rescaled or plain")->check(CLI::IsMember({"rescaled", "plain"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (scalar) simd::set_backend(simd::Backend::scalar);
    log_info(std::string("kernels: ") + std::string(simd::backend_name(simd::active_backend())));

    if (*ingest) {
      const auto split = parse_csv(ingest_input, split_kind_from_string(ingest_split));
      if (!ingest_cache.empty()) save_json_cache(ingest_cache, split);
      print_stats(split);
      return 0;
    }
    if (*synth) {
      const auto corpus = generate_synthetic_corpus(synth_cfg);
      write_corpus(synth_dir, corpus);
      print_stats(corpus.train);
      print_stats(corpus.validation);
      print_stats(corpus.test);
      return 0;
    }
    if (*sweep) return run_experiment(load_spec(sweep_flags, ExperimentKind::sweep));
    if (*strategies) return run_experiment(load_spec(strategies_flags, ExperimentKind::strategies));
    if (*baseline) return run_experiment(load_spec(baseline_flags, ExperimentKind::baseline));
    if (*eval) {
      const auto spec = load_spec(eval_flags, std::nullopt);
      spec.federation.validate();
      const auto data = prepare_data(spec);
      const auto params = load_params(eval_checkpoint);
      const auto mode = eval_mode == "plain" ? InferenceMode::plain : InferenceMode::rescaled;
      const auto report = run_eval(spec, data, params, eval_group, mode);
      fs::create_directories(spec.output_dir);
      std::ofstream json_out(spec.output_dir / "report.json", std::ios::binary);
      json_out << to_json(report).dump(2) << '\n';
      std::ofstream csv_out(spec.output_dir / "report.csv", std::ios::binary);
      write_report_csv(csv_out, report);
      write_report_csv(std::cout, report);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
