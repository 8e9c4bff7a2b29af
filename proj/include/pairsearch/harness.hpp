#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairsearch/embedding.hpp"
#include "pairsearch/posterior.hpp"
#include "pairsearch/response_model.hpp"
#include "pairsearch/strategies.hpp"

namespace pairsearch {

inline constexpr const char* kVersion = "0.1.0";

/// Strategy identifiers accepted in experiment configs: "random",
/// "infogain", "epmv", "mcmv", "gausscloud-<Q>" (Q stages) and
/// "actrank-<R>" (R votes per pair, R odd).
struct StrategyId {
  enum class Family { bayesian, gausscloud, actrank };
  Family family = Family::bayesian;
  StrategyKind kind = StrategyKind::random;
  int param = 0;
  std::string label;
};

StrategyId parse_strategy_id(const std::string& label);

struct SyntheticEmbeddingParams {
  Index n = 200;
  Index d = 2;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  std::optional<std::string> embedding_path;
  bool prepare_embedding = true;
  SyntheticEmbeddingParams synthetic;
  std::vector<std::string> strategies{"random", "mcmv"};
  NoiseFamily noise_family = NoiseFamily::logistic;
  NoiseScheme scheme = NoiseScheme::constant;
  double k0 = 20.0;
  /// When set, k0 (and oracle_k0) are fitted on these triplets instead.
  std::optional<std::string> fit_k0_triplets;
  double k0_max = kDefaultK0Max;
  std::optional<NoiseScheme> oracle_scheme;
  std::optional<double> oracle_k0;
  int trials = 20;
  int queries = 30;
  Index samples = kDefaultSampleCount;
  /// Unset: min(1, 2000 / pool size).
  std::optional<double> beta;
  double lambda = 1.0;
  double prior_half_width = 1.0;
  Index ranking_batch_size = 15;
  int ranking_batches = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  SamplerOptions sampler;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

struct TrialRecord {
  std::string strategy;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  std::vector<double> mse;
  std::vector<double> tau;
  std::vector<double> wall_ms;
  Vector final_estimate;
  Vector true_w;
  bool aborted = false;
  std::string abort_reason;
};

struct AggregateRow {
  std::string strategy;
  int query_index = 0;
  int trials = 0;
  double mse_mean = 0.0;
  double mse_se = 0.0;
  double tau_mean = 0.0;
  double tau_se = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  Index dim = 0;
  double k0 = 0.0;
  double oracle_k0 = 0.0;
  double beta = 1.0;
  std::vector<TrialRecord> trials;  // ordered by (strategy, trial)
  std::vector<AggregateRow> aggregates;
  int aborted = 0;
  bool failed = false;

  /// Aggregate row for a strategy at a 1-based query index.
  const AggregateRow& aggregate(const std::string& strategy, int query_index) const;
};

/// N standard-normal points in R^d, prepared (centered and scaled).
Embedding generate_synthetic_embedding(Index n, Index d, std::uint64_t seed);

/// Runs every strategy for every trial. Deterministic for a given config;
/// the thread count never changes the output.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// As above with an already-loaded embedding.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const Embedding> embedding);

/// Writes results.csv, summary.csv, timings.csv and metadata.json.
void write_results(const ExperimentResult& result, const std::filesystem::path& dir);

/// results.csv contents (fixed header, canonical row order).
std::string results_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);

}  // namespace pairsearch
