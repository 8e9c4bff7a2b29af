// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>

#include "../oracles.hpp"
#include "pairsearch/bound_suite.hpp"
#include "pairsearch/harness.hpp"
#include "pairsearch/metrics.hpp"
#include "pairsearch/strategies.hpp"

using namespace pairsearch;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

ExperimentConfig ordering_config() {
  ExperimentConfig cfg;
  cfg.experiment_id = "acceptance-ordering";
  cfg.synthetic = {200, 2, 1};
  cfg.strategies = {"random", "infogain", "epmv", "mcmv"};
  cfg.noise_family = NoiseFamily::logistic;
  cfg.scheme = NoiseScheme::constant;
  cfg.k0 = 20.0;
  cfg.trials = 20;
  cfg.queries = 30;
  cfg.samples = 1000;
  // The unit-scale default (1) lets the spread term swamp the centering
  // term at k0 = 20; 100 sits in the middle of the range that works.
  cfg.lambda = 100.0;
  cfg.ranking_batch_size = 15;
  cfg.ranking_batches = 100;
  cfg.seed = 2024;
  cfg.threads = thread_count();
  return cfg;
}

void oracle_equivalences() {
  Rng rng(8);
  bool kendall_ok = true;
  std::uniform_int_distribution<int> size(2, 20);
  for (int t = 0; t < 100; ++t) {
    std::vector<Index> a(static_cast<std::size_t>(size(rng)));
    std::iota(a.begin(), a.end(), Index{0});
    std::vector<Index> b = a;
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    kendall_ok &= kendall_tau_normalized(a, b) == oracle::kendall_brute(a, b);
  }

  double worst_radius = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Polytope p = oracle::random_polytope(5, rng);
    const ChebyshevBall ball = chebyshev_center(p);
    const double err = ball.feasible ? std::abs(ball.radius - oracle::chebyshev_grid(p).radius) : 1.0;
    worst_radius = std::max(worst_radius, err);
  }

  int argmax_cases = 0, argmax_hits = 0;
  for (int t = 0; t < 6; ++t) {
    const Embedding e = generate_synthetic_embedding(45, 2, 100 + t);  // 990 pairs
    std::vector<PairQuery> pool;
    for (Index i = 0; i < e.size(); ++i) {
      for (Index j = i + 1; j < e.size(); ++j) {
        pool.push_back(make_indexed_pair(e.item(i), e.item(j), i, j, {NoiseScheme::constant, 20.0}));
      }
    }
    ResponseHistory h(2);
    Rng resp(t);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int k = 0; k < t; ++k) h.append(pool[(37 * k + 11) % pool.size()], bit(resp));
    const PosteriorBatch batch = sample_posterior(h, 1000, 500 + t);
    for (StrategyKind kind : {StrategyKind::infogain, StrategyKind::epmv, StrategyKind::mcmv}) {
      const StrategyConfig cfg{kind, 1.0 + 10.0 * t, 1.0, 1000};
      std::size_t best = 0;
      double best_u = strategy_utility(cfg, pool[0], batch);
      for (std::size_t i = 1; i < pool.size(); ++i) {
        const double u = strategy_utility(cfg, pool[i], batch);
        if (u > best_u) {
          best = i;
          best_u = u;
        }
      }
      Rng sel(t);
      const PairQuery got = select_query(cfg, {batch, h, pool}, sel);
      ++argmax_cases;
      argmax_hits += got.p_index == pool[best].p_index && got.q_index == pool[best].q_index;
    }
  }
  report(8, "oracle_equivalences",
         kendall_ok && worst_radius <= 1e-2 && argmax_hits == argmax_cases,
         std::string("kendall 100/100 ") + (kendall_ok ? "exact" : "MISMATCH") + ", chebyshev worst |dr| " +
             fmt("%.2e", worst_radius) + " over 50, argmax " + std::to_string(argmax_hits) + "/" +
             std::to_string(argmax_cases));
}

void determinism() {
  ExperimentConfig cfg;
  cfg.experiment_id = "acceptance-determinism";
  cfg.synthetic = {60, 2, 7};
  cfg.strategies = {"random", "infogain", "epmv", "mcmv", "gausscloud-3", "actrank-3"};
  cfg.k0 = 20.0;
  cfg.trials = 3;
  cfg.queries = 6;
  cfg.samples = 300;
  cfg.ranking_batches = 10;
  cfg.seed = 77;
  cfg.threads = 1;
  const std::string a = results_csv(run_experiment(cfg));
  cfg.threads = 3;
  const std::string b = results_csv(run_experiment(cfg));

  namespace fs = std::filesystem;
  const fs::path d1 = fs::temp_directory_path() / "pairsearch-accept-1";
  const fs::path d2 = fs::temp_directory_path() / "pairsearch-accept-2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  write_results(run_experiment(cfg), d1);
  write_results(run_experiment(cfg), d2);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool files_equal = slurp(d1 / "results.csv") == slurp(d2 / "results.csv") &&
                           slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv") &&
                           slurp(d1 / "metadata.json") == slurp(d2 / "metadata.json");
  fs::remove_all(d1);
  fs::remove_all(d2);
  report(9, "determinism", a == b && files_equal,
         std::string("results.csv ") + std::to_string(a.size()) + " bytes; 1 vs 3 threads " +
             (a == b ? "identical" : "DIFFER") + "; rerun files " + (files_equal ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  // 1, 2, 3, 10 share one experiment.
  const ExperimentConfig cfg = ordering_config();
  const auto t0 = Clock::now();
  const ExperimentResult run = run_experiment(cfg);
  const double secs = seconds_since(t0);
  const int q = cfg.queries;
  const double random = run.aggregate("random", q).mse_mean;
  const double infogain = run.aggregate("infogain", q).mse_mean;
  const double epmv = run.aggregate("epmv", q).mse_mean;
  const double mcmv = run.aggregate("mcmv", q).mse_mean;
  report(1, "strategy_ordering", !run.failed && mcmv < random && epmv < random && secs <= 600.0,
         "MSE@30 random " + fmt("%.3e", random) + ", epmv " + fmt("%.3e", epmv) + ", mcmv " + fmt("%.3e", mcmv) +
             "; " + fmt("%.1f", secs) + " s on " + std::to_string(cfg.threads) + " thread(s), lambda " +
             fmt("%g", cfg.lambda));
  report(2, "infogain_proximity", epmv <= 2.0 * infogain && mcmv <= 2.0 * infogain,
         "MSE@30 infogain " + fmt("%.3e", infogain) + ", epmv/infogain " + fmt("%.2f", epmv / infogain) +
             ", mcmv/infogain " + fmt("%.2f", mcmv / infogain));
  const BoundCheck floor = check_mse_floor(run, 0.10);
  report(3, "mse_floor", floor.passed,
         std::to_string(floor.cases) + " rows, worst margin " + fmt("%.3e", floor.margin) + " (" + floor.detail + ")");

  const BoundCheck entropy = check_gaussian_entropy(EntropyCheckConfig{}, 4);
  report(4, "entropy_sandwich", entropy.passed,
         std::to_string(entropy.cases) + " covariances, worst margin " + fmt("%.3f", entropy.margin) + " bits (" +
             entropy.detail + ")");

  QueryBoundConfig grid;
  grid.c = {0.1, 0.5, 0.9};
  const auto t5 = Clock::now();
  const BoundCheck equi = check_equiprobable_info(grid, 5);
  const double secs5 = seconds_since(t5);
  report(5, "equiprobable_info_floor", equi.passed && secs5 <= 300.0,
         std::to_string(equi.cases) + " cases, worst margin " + fmt("%.3f", equi.margin) + " bits, " +
             fmt("%.1f", secs5) + " s (" + equi.detail + ")");

  const BoundCheck dev = check_mean_cut_deviation(grid, 5);
  const BoundCheck lim = check_mean_cut_limits();
  report(6, "mean_cut_bounds", dev.passed && lim.passed,
         std::to_string(dev.cases) + " cases, worst deviation margin " + fmt("%.3f", dev.margin) + "; limits: " +
             lim.detail);

  StoppingTimeConfig stop;
  stop.threads = thread_count();
  const BoundCheck stopping = check_stopping_time(stop, 6);
  report(7, "stopping_time_sandwich", stopping.passed, stopping.detail);

  oracle_equivalences();
  determinism();

  const double tau_e1 = run.aggregate("epmv", 1).tau_mean, tau_e30 = run.aggregate("epmv", q).tau_mean;
  const double tau_m1 = run.aggregate("mcmv", 1).tau_mean, tau_m30 = run.aggregate("mcmv", q).tau_mean;
  report(10, "ranking_trend", tau_e30 < tau_e1 && tau_m30 < tau_m1,
         "tau epmv " + fmt("%.4f", tau_e1) + " -> " + fmt("%.4f", tau_e30) + ", mcmv " + fmt("%.4f", tau_m1) +
             " -> " + fmt("%.4f", tau_m30));

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
