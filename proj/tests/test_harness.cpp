#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pairsearch/harness.hpp"
#include "test_util.hpp"

using namespace pairsearch;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.experiment_id = "unit";
  cfg.synthetic = {40, 2, 3};
  cfg.strategies = {"random", "mcmv", "gausscloud-2", "actrank-3"};
  cfg.k0 = 20.0;
  cfg.trials = 3;
  cfg.queries = 4;
  cfg.samples = 200;
  cfg.ranking_batch_size = 5;
  cfg.ranking_batches = 4;
  cfg.seed = 11;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pairsearch-test-" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("strategy ids") {
  CHECK(parse_strategy_id("mcmv").family == StrategyId::Family::bayesian);
  CHECK(parse_strategy_id("gausscloud-4").param == 4);
  CHECK(parse_strategy_id("actrank-3").family == StrategyId::Family::actrank);
  CHECK_THROWS_AS(parse_strategy_id("actrank-2"), ArgumentError);
  CHECK_THROWS_AS(parse_strategy_id("gausscloud-0"), ArgumentError);
  CHECK_THROWS_AS(parse_strategy_id("lookahead"), ArgumentError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(validate(cfg));
  cfg.trials = 0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = small_config();
  cfg.strategies = {"mcmv", "mcmv"};
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = small_config();
  cfg.strategies = {"bogus"};
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
}

TEST_CASE("config round-trips through JSON") {
  const ExperimentConfig cfg = small_config();
  const ExperimentConfig back = experiment_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK_THROWS(experiment_config_from_json(nlohmann::json::parse(R"({"trials": "many"})")));
}

TEST_CASE("synthetic embedding contract") {
  const Embedding e = generate_synthetic_embedding(200, 2, 5);
  CHECK(e.size() == 200);
  CHECK(e.dim() == 2);
  CHECK(e.items.colwise().mean().norm() < 1e-12);
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(item_covariance(e.items)).eigenvalues()(0);
  CHECK(std::abs(lambda_min - 2.0 / 9.0) < 1e-6);
  CHECK((generate_synthetic_embedding(200, 2, 5).items.array() == e.items.array()).all());
}

TEST_CASE("single trial, single query shape") {
  ExperimentConfig cfg = small_config();
  cfg.strategies = {"random"};
  cfg.trials = 1;
  cfg.queries = 1;
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.trials[0].mse.size() == 1);
  CHECK(r.trials[0].tau.size() == 1);
  CHECK(r.trials[0].wall_ms.size() == 1);
}

TEST_CASE("experiment records, aggregates and ids") {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.trials.size() == cfg.strategies.size() * static_cast<std::size_t>(cfg.trials));
  CHECK(r.aborted == 0);
  CHECK_FALSE(r.failed);
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialRecord& rec = r.trials[s * cfg.trials + t];
      CHECK(rec.strategy == cfg.strategies[s]);
      CHECK(rec.trial == t);
      CHECK(rec.mse.size() == static_cast<std::size_t>(cfg.queries));
      for (double m : rec.mse) CHECK(m >= 0.0);
      for (double tau : rec.tau) {
        CHECK(tau >= 0.0);
        CHECK(tau <= 1.0);
      }
    }
    for (int q = 1; q <= cfg.queries; ++q) {
      double sum = 0.0, tsum = 0.0;
      for (int t = 0; t < cfg.trials; ++t) {
        sum += r.trials[s * cfg.trials + t].mse[q - 1];
        tsum += r.trials[s * cfg.trials + t].tau[q - 1];
      }
      const AggregateRow& row = r.aggregate(cfg.strategies[s], q);
      CHECK(row.trials == cfg.trials);
      CHECK(std::abs(row.mse_mean - sum / cfg.trials) <= 1e-12);
      CHECK(std::abs(row.tau_mean - tsum / cfg.trials) <= 1e-12);
    }
  }
  // All strategies face the same true points.
  for (int t = 0; t < cfg.trials; ++t) {
    for (std::size_t s = 1; s < cfg.strategies.size(); ++s) {
      CHECK((r.trials[s * cfg.trials + t].true_w.array() == r.trials[t].true_w.array()).all());
    }
  }
  const std::string csv = results_csv(r);
  CHECK(csv.rfind("experiment_id,strategy,trial,query_index,mse,tau\n", 0) == 0);
  CHECK(csv.find("gausscloud-2") != std::string::npos);
  CHECK(csv.find("actrank-3") != std::string::npos);
}

TEST_CASE("reruns and thread counts give byte-identical files") {
  ExperimentConfig cfg = small_config();
  const fs::path a = temp_dir("a"), b = temp_dir("b");
  write_results(run_experiment(cfg), a);
  cfg.threads = 3;
  write_results(run_experiment(cfg), b);
  for (const char* name : {"results.csv", "summary.csv", "metadata.json"}) {
    CHECK(fs::exists(a / name));
    const std::string left = slurp(a / name), right = slurp(b / name);
    if (std::string(name) == "metadata.json") {
      // Only the thread count differs.
      auto ja = nlohmann::json::parse(left), jb = nlohmann::json::parse(right);
      ja["config"].erase("threads");
      jb["config"].erase("threads");
      CHECK(ja == jb);
    } else {
      CHECK(left == right);
    }
  }
  CHECK(fs::exists(a / "timings.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("a different seed changes the results") {
  ExperimentConfig cfg = small_config();
  cfg.strategies = {"random"};
  const std::string one = results_csv(run_experiment(cfg));
  cfg.seed = 12;
  CHECK(results_csv(run_experiment(cfg)) != one);
}

TEST_CASE("mismatched gaussian oracle and the other noise schemes run") {
  ExperimentConfig cfg = small_config();
  cfg.strategies = {"epmv", "infogain"};
  cfg.noise_family = NoiseFamily::gaussian;
  cfg.scheme = NoiseScheme::normalized;
  cfg.trials = 2;
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.aborted == 0);
  CHECK(r.trials.size() == 4);
}
