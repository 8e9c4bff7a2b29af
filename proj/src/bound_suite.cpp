#include "pairsearch/bound_suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "pairsearch/bounds.hpp"
#include "pairsearch/numeric.hpp"
#include "pairsearch/posterior.hpp"
#include "pairsearch/strategies.hpp"

namespace pairsearch {

namespace {

Vector random_unit(Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  do {
    for (Index i = 0; i < d; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Matrix random_covariance(Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_eig(std::log(0.05), std::log(5.0));
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector eig(d);
  for (Index i = 0; i < d; ++i) eig(i) = std::exp(log_eig(rng));
  return q * eig.asDiagonal() * q.transpose();
}

// A few noisy cuts through the box [-r, r]^d answered by a random user, so
// the posterior is log-concave but not simply the uniform prior.
ResponseHistory random_history(Index d, double r, int n_queries, Rng& rng) {
  ResponseHistory h(d, r);
  std::uniform_real_distribution<double> unif(-r, r);
  Vector w(d), u(d);
  for (Index i = 0; i < d; ++i) w(i) = unif(rng);
  for (int n = 0; n < n_queries; ++n) {
    for (Index i = 0; i < d; ++i) u(i) = 0.5 * unif(rng);
    const Vector a = random_unit(d, rng);
    const PairQuery pq = pair_from_hyperplane(a, a.dot(u), 3.0 / r);
    std::bernoulli_distribution coin(1.0 - response_probability(w, pq));
    h.append(pq, coin(rng) ? 1 : 0);
  }
  return h;
}

struct GridCase {
  double k;
  double sigma_target;
  PosteriorBatch batch;
};

// One posterior batch per (k, sigma) cell. The box is sized so that the
// prior's projected standard deviation equals the target sigma.
std::vector<GridCase> grid_batches(const QueryBoundConfig& cfg, std::uint64_t seed) {
  std::vector<GridCase> cases;
  std::uint64_t counter = 0;
  for (double k : cfg.k) {
    for (double sigma : cfg.sigma) {
      Rng rng = make_rng(seed, hash_label("grid"), counter);
      const double r = sigma * std::sqrt(3.0);
      const ResponseHistory h = random_history(2, r, 3, rng);
      cases.push_back({k, sigma, sample_posterior(h, cfg.samples, derive_seed(seed, hash_label("grid-batch"), counter))});
      ++counter;
    }
  }
  return cases;
}

double projected_sigma(const PairQuery& pq, const PosteriorBatch& batch) {
  const Vector a = pq.a.normalized();
  return std::sqrt(std::max(0.0, a.dot(batch.covariance() * a)));
}

PairQuery mean_cut_query(const PosteriorBatch& batch, double k) {
  const Vector a = top_eigenvector(batch.covariance());
  return pair_from_hyperplane(a, a.dot(batch.mean()), k);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

void update(BoundCheck& c, double slack, const std::string& where) {
  if (c.cases == 0 || slack < c.margin) {
    c.margin = slack;
    c.detail = "worst case: " + where;
  }
  ++c.cases;
  c.passed = c.margin >= 0.0;
}

}  // namespace

bool BoundReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.passed; });
}

const BoundCheck& BoundReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ArgumentError("no bound check named " + name);
}

BoundCheck check_gaussian_entropy(const EntropyCheckConfig& cfg, std::uint64_t seed) {
  BoundCheck check{"entropy_sandwich_gaussian", true, 0.0, 0, ""};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index d : cfg.dims) {
    for (int n = 0; n < cfg.covariances_per_dim; ++n) {
      Rng rng = make_rng(seed, hash_label("gaussian-entropy"), static_cast<std::uint64_t>(d * 1000 + n));
      const Matrix cov = random_covariance(d, rng);
      const Matrix l = Eigen::LLT<Matrix>(cov).matrixL();
      RowMatrix x(cfg.samples, d);
      Vector z(d);
      for (Index s = 0; s < cfg.samples; ++s) {
        for (Index i = 0; i < d; ++i) z(i) = normal(rng);
        x.row(s) = (l * z).transpose();
      }
      const double est = knn_entropy_bits(x);
      const EntropyBounds b = lcc_entropy_bounds(cov);
      const double slack = std::min({est - (b.lower_bits - cfg.delta_bits), b.upper_bits + cfg.delta_bits - est,
                                     cfg.delta_bits - std::abs(est - b.upper_bits)});
      update(check, slack,
             "d=" + std::to_string(d) + " estimate " + fmt(est) + " bits, bounds [" + fmt(b.lower_bits) + ", " +
                 fmt(b.upper_bits) + "]");
    }
  }
  return check;
}

BoundCheck check_posterior_entropy(const EntropyCheckConfig& cfg, std::uint64_t seed) {
  BoundCheck check{"entropy_sandwich_posterior", true, 0.0, 0, ""};
  SamplerOptions options;
  options.initial_thin = cfg.posterior_thin;
  for (int n = 0; n < cfg.posterior_batches; ++n) {
    const Index d = cfg.dims[static_cast<std::size_t>(n) % cfg.dims.size()];
    Rng rng = make_rng(seed, hash_label("posterior-entropy"), static_cast<std::uint64_t>(n));
    const ResponseHistory h = random_history(d, 1.0, 2 * static_cast<int>(d), rng);
    const PosteriorBatch batch =
        sample_posterior(h, cfg.samples, derive_seed(seed, hash_label("posterior-entropy-batch"), n), options);
    const double est = posterior_entropy_estimate(batch);
    const EntropyBounds b = lcc_entropy_bounds(batch.covariance());
    const double slack = std::min(est - (b.lower_bits - cfg.delta_bits), b.upper_bits + cfg.delta_bits - est);
    update(check, slack,
           "d=" + std::to_string(d) + " estimate " + fmt(est) + " bits, bounds [" + fmt(b.lower_bits) + ", " +
               fmt(b.upper_bits) + "]");
  }
  return check;
}

BoundCheck check_equiprobable_info(const QueryBoundConfig& cfg, std::uint64_t seed) {
  BoundCheck check{"equiprobable_info_floor", true, 0.0, 0, ""};
  for (const GridCase& g : grid_batches(cfg, seed)) {
    const PairQuery pq = continuous_epmv_query(g.batch, g.k);
    const double sigma = projected_sigma(pq, g.batch);
    const double info = info_gain_utility(pq, g.batch);
    for (double c : cfg.c) {
      const double floor = equiprobable_info_lower(c, g.k, sigma);
      update(check, info - (floor - cfg.info_slack_bits),
             "k=" + fmt(g.k) + " sigma=" + fmt(sigma) + " c=" + fmt(c) + " info " + fmt(info) + " floor " +
                 fmt(floor));
    }
  }
  return check;
}

BoundCheck check_mean_cut_deviation(const QueryBoundConfig& cfg, std::uint64_t seed) {
  BoundCheck check{"mean_cut_deviation", true, 0.0, 0, ""};
  for (const GridCase& g : grid_batches(cfg, seed)) {
    const PairQuery pq = mean_cut_query(g.batch, g.k);
    const double sigma = projected_sigma(pq, g.batch);
    const Index s = g.batch.size();
    double sum = 0.0, sum2 = 0.0;
    for (Index i = 0; i < s; ++i) {
      const double f = 1.0 - response_probability(g.batch.samples().row(i).transpose(), pq);
      sum += f;
      sum2 += f * f;
    }
    const double p1 = sum / static_cast<double>(s);
    const double var = std::max(0.0, sum2 / static_cast<double>(s) - p1 * p1);
    const double se = std::sqrt(var / static_cast<double>(s));
    const double bound = mean_cut_bounds(g.k, sigma).deviation_bound;
    update(check, bound + cfg.se_multiplier * se - std::abs(p1 - 0.5),
           "k=" + fmt(g.k) + " sigma=" + fmt(sigma) + " |p1-1/2|=" + fmt(std::abs(p1 - 0.5)) + " bound " +
               fmt(bound));
  }
  return check;
}

BoundCheck check_mean_cut_info(const QueryBoundConfig& cfg, std::uint64_t seed) {
  BoundCheck check{"mean_cut_info_floor", true, 0.0, 0, ""};
  for (const GridCase& g : grid_batches(cfg, seed)) {
    const PairQuery pq = mean_cut_query(g.batch, g.k);
    const double sigma = projected_sigma(pq, g.batch);
    const double info = info_gain_utility(pq, g.batch);
    const double floor = mean_cut_bounds(g.k, sigma).info_lower_bits;
    update(check, info - (floor - cfg.info_slack_bits),
           "k=" + fmt(g.k) + " sigma=" + fmt(sigma) + " info " + fmt(info) + " floor " + fmt(floor));
  }
  return check;
}

BoundCheck check_mean_cut_limits() {
  BoundCheck check{"mean_cut_limits", true, 0.0, 0, ""};
  const double e = std::exp(1.0);
  const MeanCutBounds lim = mean_cut_bounds(1e15, 1.0);
  const double dev_closed = (e - 2.0) / (2.0 * e);
  const double p = 1.0 / e;
  const double info_closed = -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
  update(check, 5e-4 - std::abs(lim.deviation_bound - dev_closed),
         "deviation limit " + fmt(lim.deviation_bound) + " vs " + fmt(dev_closed));
  update(check, 5e-4 - std::abs(lim.info_lower_bits - info_closed),
         "info limit " + fmt(lim.info_lower_bits) + " vs " + fmt(info_closed));
  update(check, 5e-3 - std::abs(lim.deviation_bound - 0.132), "deviation limit rounds to 0.132");
  update(check, 5e-3 - std::abs(lim.info_lower_bits - 0.95), "info limit rounds to 0.95");
  return check;
}

StoppingTimeRun simulate_stopping_times(const StoppingTimeConfig& cfg, std::uint64_t seed) {
  if (cfg.runs < 1 || cfg.max_queries < 1) throw ArgumentError("invalid stopping-time config");
  StoppingTimeRun out;
  out.stopping_times.assign(static_cast<std::size_t>(cfg.runs), 0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int run = next++; run < cfg.runs; run = next++) {
      try {
        const std::uint64_t run_seed = derive_seed(seed, hash_label("stopping"), static_cast<std::uint64_t>(run));
        Rng rng = make_rng(run_seed, hash_label("truth"));
        std::uniform_real_distribution<double> unif(-cfg.prior_half_width, cfg.prior_half_width);
        OracleConfig oracle;
        oracle.scheme = {NoiseScheme::constant, cfg.k_min};
        oracle.true_w.resize(cfg.dim);
        for (Index i = 0; i < cfg.dim; ++i) oracle.true_w(i) = unif(rng);
        ResponseHistory h(cfg.dim, cfg.prior_half_width);
        PosteriorBatch batch = sample_posterior(h, cfg.samples, derive_seed(run_seed, hash_label("posterior"), 0));
        int t = cfg.max_queries;
        for (int i = 1; i <= cfg.max_queries; ++i) {
          const PairQuery pq = continuous_epmv_query(batch, cfg.k_min);
          h.append(pq, simulate_response(pq, oracle, rng));
          batch = sample_posterior(h, cfg.samples, derive_seed(run_seed, hash_label("posterior"), i));
          if (volume_root(batch.covariance()) < cfg.epsilon) {
            t = i;
            break;
          }
        }
        out.stopping_times[static_cast<std::size_t>(run)] = t;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min(cfg.threads, cfg.runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const auto n = static_cast<double>(cfg.runs);
  for (int t : out.stopping_times) out.mean += t;
  out.mean /= n;
  double ss = 0.0;
  for (int t : out.stopping_times) ss += (t - out.mean) * (t - out.mean);
  out.se = cfg.runs > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  out.bounds = best_stopping_time_bounds(cfg.epsilon, cfg.dim, cfg.k_min);
  return out;
}

BoundCheck check_stopping_time(const StoppingTimeConfig& cfg, std::uint64_t seed) {
  const StoppingTimeRun run = simulate_stopping_times(cfg, seed);
  BoundCheck check{"stopping_time_sandwich", true, 0.0, 0, ""};
  const double lo = run.bounds.tau1 - 2.0 * run.se;
  const double hi = run.bounds.upper + 2.0 * run.se;
  check.cases = cfg.runs;
  check.margin = std::min(run.mean - lo, hi - run.mean);
  const bool censored =
      std::any_of(run.stopping_times.begin(), run.stopping_times.end(), [&](int t) { return t >= cfg.max_queries; });
  check.passed = check.margin >= 0.0 && !censored;
  check.detail = "mean T " + fmt(run.mean) + " (SE " + fmt(run.se) + "), tau1 " + fmt(run.bounds.tau1) +
                 ", tau2 " + fmt(run.bounds.tau2) + ", upper " + fmt(run.bounds.upper) +
                 (censored ? ", some runs hit max_queries" : "");
  return check;
}

BoundCheck check_mse_floor(const ExperimentResult& result, double slack) {
  BoundCheck check{"mse_floor", true, 0.0, 0, ""};
  for (const AggregateRow& row : result.aggregates) {
    if (row.trials == 0) continue;
    const double floor = mse_lower_bound(result.dim, row.query_index);
    update(check, row.mse_mean - (1.0 - slack) * floor,
           row.strategy + " query " + std::to_string(row.query_index) + " mean MSE " + fmt(row.mse_mean) +
               " floor " + fmt(floor));
  }
  return check;
}

BoundReport run_bound_suite(const BoundSuiteConfig& cfg) {
  BoundReport report;
  if (cfg.run_entropy) {
    report.checks.push_back(check_gaussian_entropy(cfg.entropy, cfg.seed));
    if (cfg.entropy.posterior_batches > 0) report.checks.push_back(check_posterior_entropy(cfg.entropy, cfg.seed));
  }
  if (cfg.run_queries) {
    report.checks.push_back(check_equiprobable_info(cfg.queries, cfg.seed));
    report.checks.push_back(check_mean_cut_deviation(cfg.queries, cfg.seed));
    report.checks.push_back(check_mean_cut_info(cfg.queries, cfg.seed));
    report.checks.push_back(check_mean_cut_limits());
  }
  if (cfg.run_stopping) report.checks.push_back(check_stopping_time(cfg.stopping, cfg.seed));
  if (cfg.experiment) report.checks.push_back(check_mse_floor(run_experiment(*cfg.experiment), cfg.mse_slack));
  return report;
}

BoundSuiteConfig bound_suite_config_from_json(const nlohmann::json& j) {
  BoundSuiteConfig cfg;
  if (!j.is_object()) throw ArgumentError("bound suite config must be an object");
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.mse_slack = j.value("mse_slack", cfg.mse_slack);
    if (j.contains("entropy")) {
      const auto& e = j.at("entropy");
      cfg.run_entropy = e.value("enabled", true);
      if (e.contains("dims")) cfg.entropy.dims = e.at("dims").get<std::vector<Index>>();
      cfg.entropy.covariances_per_dim = e.value("covariances_per_dim", cfg.entropy.covariances_per_dim);
      cfg.entropy.samples = e.value("samples", cfg.entropy.samples);
      cfg.entropy.delta_bits = e.value("delta_bits", cfg.entropy.delta_bits);
      cfg.entropy.posterior_batches = e.value("posterior_batches", cfg.entropy.posterior_batches);
      cfg.entropy.posterior_thin = e.value("posterior_thin", cfg.entropy.posterior_thin);
    }
    if (j.contains("queries")) {
      const auto& q = j.at("queries");
      cfg.run_queries = q.value("enabled", true);
      if (q.contains("k")) cfg.queries.k = q.at("k").get<std::vector<double>>();
      if (q.contains("sigma")) cfg.queries.sigma = q.at("sigma").get<std::vector<double>>();
      if (q.contains("c")) cfg.queries.c = q.at("c").get<std::vector<double>>();
      cfg.queries.samples = q.value("samples", cfg.queries.samples);
      cfg.queries.info_slack_bits = q.value("info_slack_bits", cfg.queries.info_slack_bits);
      cfg.queries.se_multiplier = q.value("se_multiplier", cfg.queries.se_multiplier);
    }
    if (j.contains("stopping")) {
      const auto& s = j.at("stopping");
      cfg.run_stopping = s.value("enabled", true);
      cfg.stopping.dim = s.value("dim", cfg.stopping.dim);
      cfg.stopping.k_min = s.value("k_min", cfg.stopping.k_min);
      cfg.stopping.epsilon = s.value("epsilon", cfg.stopping.epsilon);
      cfg.stopping.runs = s.value("runs", cfg.stopping.runs);
      cfg.stopping.samples = s.value("samples", cfg.stopping.samples);
      cfg.stopping.max_queries = s.value("max_queries", cfg.stopping.max_queries);
      cfg.stopping.prior_half_width = s.value("prior_half_width", cfg.stopping.prior_half_width);
      cfg.stopping.threads = s.value("threads", cfg.stopping.threads);
    }
    if (j.contains("experiment")) cfg.experiment = experiment_config_from_json(j.at("experiment"));
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad bound suite config: ") + e.what());
  }
  for (double c : cfg.queries.c) {
    if (!(c > 0.0 && c < 1.0)) throw ArgumentError("c values must lie in (0, 1)");
  }
  return cfg;
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json j;
  j["passed"] = report.passed();
  j["checks"] = nlohmann::json::array();
  for (const BoundCheck& c : report.checks) {
    j["checks"].push_back(
        {{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}, {"cases", c.cases}, {"detail", c.detail}});
  }
  return j;
}

}  // namespace pairsearch
