#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedhumor/errors.hpp"
#include "fedhumor/experiments.hpp"
#include "test_support.hpp"

using namespace fedhumor;
using namespace fedhumor::testing;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny_spec(ExperimentKind kind, const fs::path& out) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.data = {data_path("fixture_200.csv"), data_path("fixture_200.csv"), data_path("fixture_200.csv")};
  spec.groups = default_groups();
  spec.alpha_grid = {0.6, 1.2};
  spec.beta_grid = {0.0, 1.0};
  spec.federation.rounds = 3;
  spec.federation.feature_dim = 256;
  spec.federation.batch_size = 16;
  spec.federation.learning_rate = 2.0;
  spec.output_dir = out;
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("experiment spec JSON") {
  const auto dir = fs::temp_directory_path() / "fedhumor_spec_test";
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({
    "kind": "sweep",
    "data": {"train": "d/train.csv", "validation": "d/dev.csv", "test": "/abs/test.csv"},
    "alpha_grid": {"from": 0.2, "to": 0.4, "step": 0.1},
    "beta_grid": [0.0, 1.5],
    "federation": {"rounds": 4, "seed": 9},
    "clients_per_round": 2,
    "output_dir": "out"
  })";
  const auto spec = load_experiment_spec(dir / "cfg.json");
  CHECK(spec.kind == ExperimentKind::sweep);
  CHECK(spec.data.train == dir / "d/train.csv");
  CHECK(spec.data.test == fs::path("/abs/test.csv"));
  CHECK(spec.alpha_grid == std::vector<double>{0.2, 0.3, 0.4});
  CHECK(spec.beta_grid == std::vector<double>{0.0, 1.5});
  CHECK(spec.federation.rounds == 4);
  CHECK(spec.federation.batch_size == FederationConfig{}.batch_size);
  CHECK(spec.clients_per_round == 2);
  CHECK(spec.output_dir == dir / "out");

  const auto again = experiment_spec_from_json(to_json(spec));
  CHECK(again.alpha_grid == spec.alpha_grid);
  CHECK(again.data.train == spec.data.train);
  CHECK(again.clients_per_round == spec.clients_per_round);
  fs::remove_all(dir);

  CHECK_THROWS_AS(experiment_kind_from_string("table9"), DomainError);
}

TEST_CASE("default grids and groups") {
  const ExperimentSpec spec = experiment_spec_from_json(nlohmann::json::object());
  CHECK(spec.alpha_grid.size() * spec.beta_grid.size() == 399);
  CHECK(spec.alpha_grid.front() == 0.2);
  CHECK(spec.beta_grid.front() == 0.0);
  CHECK(spec.beta_grid.back() == 2.0);
  const auto groups = default_groups();
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].members.size() == 3);
  CHECK(groups[1].members.size() == 18);
  CHECK_FALSE(spec.clients_per_round.has_value());
}

TEST_CASE("percent formatting") {
  CHECK(format_percent(0.12345) == "12.35");
  CHECK(format_percent(0.0) == "0.00");
  CHECK(format_percent(1.0) == "100.00");
}

TEST_CASE("one-cell sweep") {
  auto spec = tiny_spec(ExperimentKind::sweep, fs::temp_directory_path() / "fedhumor_sweep1");
  spec.alpha_grid = {1.0};
  spec.beta_grid = {1.0};
  const auto data = prepare_data(spec);
  const auto result = run_sweep(spec, data);
  REQUIRE(result.rows.size() == 1);
  CHECK(result.failures.empty());
  CHECK(result.rows[0].positives == 93);
  CHECK(result.rows[0].best_round >= 1);
  CHECK(result.rows[0].best_round <= 3);
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  CHECK(csv.str().rfind("alpha,beta,positives,best_round,macro_p,macro_r,macro_f1\n", 0) == 0);
}

TEST_CASE("independent training equals one-client federation") {
  auto spec = tiny_spec(ExperimentKind::strategies, fs::temp_directory_path() / "fedhumor_indv");
  spec.groups = {GroupSpec{"solo", {PreferenceSpec{0.9, 1.0}}}};
  const auto data = prepare_data(spec);
  const auto result = run_strategies(spec, data);
  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[1].strategy == "INDV");
  CHECK(result.rows[2].strategy == "FED");
  CHECK(result.rows[1].report == result.rows[2].report);
  fs::remove_all(spec.output_dir);
}

TEST_CASE("pooling duplicate clients is the same as one copy") {
  auto spec = tiny_spec(ExperimentKind::strategies, {});
  spec.federation.batch_size = 100000;  // full batch
  const auto data = prepare_data(spec);
  const PreferenceSpec pref[] = {{1.0, std::nullopt}};
  const auto group = build_group("g", pref, data, PriorPolicy::clamp);
  const auto& labels = group.members[0].train_labels;

  auto single = TrainingSet::from_view(data.train_x, labels);
  auto tripled = single;
  tripled.append(labels);
  tripled.append(labels);
  CHECK(tripled.size() == 3 * single.size());
  const auto a = train_centralized(single, group.validation, data.validation_x, spec.federation);
  const auto b = train_centralized(tripled, group.validation, data.validation_x, spec.federation);
  CHECK(max_abs_diff(a.params, b.params) <= 1e-12);
  CHECK(a.best_round == b.best_round);
}

TEST_CASE("strategies produce all rows and reruns are byte identical") {
  const auto out_a = fs::temp_directory_path() / "fedhumor_det_a";
  const auto out_b = fs::temp_directory_path() / "fedhumor_det_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  for (auto kind : {ExperimentKind::strategies, ExperimentKind::baseline, ExperimentKind::sweep}) {
    CHECK(run_experiment(tiny_spec(kind, out_a)) == 0);
    CHECK(run_experiment(tiny_spec(kind, out_b)) == 0);
  }
  for (const char* name : {"strategies.csv", "baseline.csv", "sweep.csv"}) {
    CAPTURE(name);
    const auto a = slurp(out_a / name);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(out_b / name));
  }
  const auto strategies = slurp(out_a / "strategies.csv");
  CHECK(strategies.rfind("group,strategy,precision,recall,f1\n", 0) == 0);
  for (const char* row : {"Group 1,AGG,", "Group 1,INDV,", "Group 1,FED,", "Group 2,AGG,",
                          "Group 2,INDV,", "Group 2,FED,"}) {
    CHECK(strategies.find(row) != std::string::npos);
  }
  CHECK(slurp(out_a / "baseline.csv").find("FedHumor,") != std::string::npos);
  CHECK(fs::exists(out_a / "rounds_group_2.jsonl"));
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("sweep failures are reported, not fatal") {
  auto spec = tiny_spec(ExperimentKind::sweep, fs::temp_directory_path() / "fedhumor_sweep_fail");
  fs::remove_all(spec.output_dir);
  fs::create_directories(spec.output_dir);
  // A training split where nothing is rated 1.5 or higher.
  {
    std::ofstream train(spec.output_dir / "train.csv");
    train << "id,original,edit,grades,meanGrade\n";
    for (int i = 0; i < 12; ++i) {
      train << i << ",\"word" << i << " <old/> tail\",new" << i << ',' << (i % 2 ? "11111" : "00000")
            << ',' << (i % 2 ? "1.0" : "0.0") << '\n';
    }
  }
  spec.data.train = spec.output_dir / "train.csv";
  spec.federation.clamp_degenerate_priors = false;
  spec.alpha_grid = {0.5, 1.5};
  spec.beta_grid = {1.0};
  CHECK(run_experiment(spec) == 1);
  const auto failures = slurp(spec.output_dir / "sweep_failures.csv");
  CHECK(failures.find("1.5,1.0,") != std::string::npos);
  fs::remove_all(spec.output_dir);
}

TEST_CASE("spec validation") {
  auto spec = tiny_spec(ExperimentKind::strategies, "x");
  spec.subsample_fraction = 0.0;
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec = tiny_spec(ExperimentKind::strategies, "x");
  spec.clients_per_round = 0;
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec = tiny_spec(ExperimentKind::sweep, "x");
  spec.alpha_grid.clear();
  CHECK_THROWS_AS(spec.validate(), DomainError);
}
