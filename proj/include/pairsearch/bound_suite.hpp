#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairsearch/bounds.hpp"
#include "pairsearch/harness.hpp"

namespace pairsearch {

struct BoundCheck {
  std::string name;
  bool passed = false;
  /// Worst-case slack over the check's cases; negative when it failed.
  double margin = 0.0;
  int cases = 0;
  std::string detail;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  bool passed() const;
  const BoundCheck& check(const std::string& name) const;
};

struct EntropyCheckConfig {
  std::vector<Index> dims{2, 4, 8};
  int covariances_per_dim = 20;
  Index samples = 4000;
  double delta_bits = 0.25;
  /// Posterior batches checked against the same sandwich (0 disables).
  int posterior_batches = 6;
  /// Heavier thinning than the selection sampler: the nearest-neighbour
  /// estimator rejects batches with more than 1% repeated draws.
  int posterior_thin = 64;
};

struct QueryBoundConfig {
  std::vector<double> k{1.0, 3.0, 10.0, 30.0, 100.0};
  std::vector<double> sigma{0.02, 0.05, 0.1, 0.2, 0.4};
  std::vector<double> c{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  Index samples = 2000;
  double info_slack_bits = 0.05;
  double se_multiplier = 3.0;
};

struct StoppingTimeConfig {
  Index dim = 2;
  double k_min = 10.0;
  double epsilon = 1e-3;
  int runs = 20;
  Index samples = kDefaultSampleCount;
  int max_queries = 2000;
  double prior_half_width = 0.5;
  int threads = 1;
};

struct BoundSuiteConfig {
  std::uint64_t seed = 1;
  EntropyCheckConfig entropy;
  QueryBoundConfig queries;
  StoppingTimeConfig stopping;
  /// Experiment whose recorded MSE series is checked against the floor.
  std::optional<ExperimentConfig> experiment;
  double mse_slack = 0.10;
  bool run_entropy = true;
  bool run_queries = true;
  bool run_stopping = true;
};

BoundSuiteConfig bound_suite_config_from_json(const nlohmann::json& j);

BoundCheck check_gaussian_entropy(const EntropyCheckConfig& cfg, std::uint64_t seed);
BoundCheck check_posterior_entropy(const EntropyCheckConfig& cfg, std::uint64_t seed);
/// Equiprobable arbitrary-hyperplane queries against information floors.
BoundCheck check_equiprobable_info(const QueryBoundConfig& cfg, std::uint64_t seed);
/// Mean-cut deviation bound.
BoundCheck check_mean_cut_deviation(const QueryBoundConfig& cfg, std::uint64_t seed);
/// Mean-cut information floor.
BoundCheck check_mean_cut_info(const QueryBoundConfig& cfg, std::uint64_t seed);
/// Large-k sigma limits of the mean-cut evaluators against their closed forms.
BoundCheck check_mean_cut_limits();

struct StoppingTimeRun {
  std::vector<int> stopping_times;
  double mean = 0.0;
  double se = 0.0;
  StoppingTimeBounds bounds{};
};

StoppingTimeRun simulate_stopping_times(const StoppingTimeConfig& cfg, std::uint64_t seed);
BoundCheck check_stopping_time(const StoppingTimeConfig& cfg, std::uint64_t seed);

/// Every trial-averaged MSE value must stay above (1 - slack) times the floor.
BoundCheck check_mse_floor(const ExperimentResult& result, double slack = 0.10);

BoundReport run_bound_suite(const BoundSuiteConfig& cfg);

nlohmann::json to_json(const BoundReport& report);

}  // namespace pairsearch
