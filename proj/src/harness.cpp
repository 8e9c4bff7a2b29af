#include "pairsearch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "pairsearch/baselines.hpp"
#include "pairsearch/metrics.hpp"
#include "pairsearch/session_state.hpp"

namespace pairsearch {

namespace {

constexpr std::uint64_t kTrialStream = 0x7472696131ULL;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int parse_suffix(const std::string& label, std::size_t prefix_len) {
  const std::string digits = label.substr(prefix_len);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ArgumentError("invalid strategy id: " + label);
  }
  return std::stoi(digits);
}

struct TrialContext {
  const ExperimentConfig& cfg;
  std::shared_ptr<const CandidatePool> pool;
  NoiseSchemeConfig oracle_scheme;
  double beta;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void record(TrialRecord& rec, const TrialContext& ctx, const Vector& estimate, int query_index,
            std::chrono::steady_clock::time_point start) {
  rec.wall_ms.push_back(elapsed_ms(start));
  rec.mse.push_back(mse(rec.true_w, estimate));
  Rng rng = make_rng(rec.trial_seed, hash_label("ranking"), static_cast<std::uint64_t>(query_index));
  rec.tau.push_back(ranking_metric(rec.true_w, estimate, ctx.pool->embedding(), ctx.cfg.ranking_batch_size,
                                   ctx.cfg.ranking_batches, rng));
}

// Candidate list for the baseline selectors. Materialized pools are scanned
// in full; lazy pools get a fresh beta-sized sample.
std::span<const PairQuery> baseline_candidates(const TrialContext& ctx, Rng& rng, std::vector<PairQuery>& scratch) {
  if (ctx.pool->materialized()) return ctx.pool->pairs();
  double unused = 1.0;
  scratch = ctx.pool->draw_candidates(ctx.beta, rng, unused);
  return scratch;
}

void run_bayesian(const TrialContext& ctx, const StrategyId& id, TrialRecord& rec, const OracleConfig& oracle,
                  Rng& oracle_rng) {
  StrategyConfig sc;
  sc.kind = id.kind;
  sc.lambda = ctx.cfg.lambda;
  sc.beta = ctx.beta;
  sc.samples = ctx.cfg.samples;
  const std::uint64_t session_seed = derive_seed(rec.trial_seed, hash_label(id.label));
  SessionState st = init_session(ctx.pool, sc, session_seed, ctx.cfg.prior_half_width, ctx.cfg.sampler);
  const Responder respond = [&](const PairQuery& pq) { return simulate_response(pq, oracle, oracle_rng); };
  for (int i = 1; i <= ctx.cfg.queries; ++i) {
    const auto start = std::chrono::steady_clock::now();
    run_step(st, respond);
    record(rec, ctx, st.estimate, i, start);
  }
  rec.final_estimate = st.estimate;
}

void run_actrank(const TrialContext& ctx, const StrategyId& id, TrialRecord& rec, const OracleConfig& oracle,
                 Rng& oracle_rng) {
  const Index d = ctx.pool->embedding().dim();
  Rng rng = make_rng(rec.trial_seed, hash_label(id.label), 1);
  Polytope poly = Polytope::box(d, ctx.cfg.prior_half_width);
  Vector estimate = Vector::Zero(d);
  std::vector<PairQuery> scratch;
  int asked = 0;
  while (asked < ctx.cfg.queries) {
    auto start = std::chrono::steady_clock::now();
    const PairQuery pq = actrank_select(poly, baseline_candidates(ctx, rng, scratch), rng);
    std::vector<int> votes;
    // Every repetition is one query; the estimate moves only once the vote
    // is complete.
    for (int rep = 0; rep < id.param && asked < ctx.cfg.queries; ++rep) {
      votes.push_back(simulate_response(pq, oracle, oracle_rng));
      ++asked;
      if (static_cast<int>(votes.size()) == id.param) {
        poly = actrank_update(poly, pq, majority_vote(votes));
        const ChebyshevBall ball = chebyshev_center(poly);
        if (ball.feasible) estimate = ball.center;
      }
      record(rec, ctx, estimate, asked, start);
      start = std::chrono::steady_clock::now();
    }
  }
  rec.final_estimate = estimate;
}

void run_gausscloud(const TrialContext& ctx, const StrategyId& id, TrialRecord& rec, const OracleConfig& oracle,
                    Rng& oracle_rng) {
  const Index d = ctx.pool->embedding().dim();
  Rng rng = make_rng(rec.trial_seed, hash_label(id.label), 1);
  const Polytope box = Polytope::box(d, ctx.cfg.prior_half_width);
  GaussCloudState gc = make_gausscloud_state(d, id.param, ctx.cfg.queries, ctx.cfg.prior_half_width);
  std::vector<Halfspace> cuts;
  std::vector<PairQuery> scratch;
  for (int i = 1; i <= ctx.cfg.queries; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const PairQuery& pq = gausscloud_select(gc, baseline_candidates(ctx, rng, scratch), rng);
    cuts.push_back(response_halfspace(pq, simulate_response(pq, oracle, oracle_rng)));
    gc.current_center = soft_chebyshev_center(box, cuts);
    record(rec, ctx, gc.current_center, i, start);
  }
  rec.final_estimate = gc.current_center;
}

TrialRecord run_trial(const TrialContext& ctx, const StrategyId& id, int trial) {
  TrialRecord rec;
  rec.strategy = id.label;
  rec.trial = trial;
  rec.trial_seed = derive_seed(ctx.cfg.seed, kTrialStream, static_cast<std::uint64_t>(trial));
  const Index d = ctx.pool->embedding().dim();
  // The true point depends on the trial only, so strategies are compared on
  // the same users.
  Rng truth_rng = make_rng(rec.trial_seed, hash_label("truth"));
  std::uniform_real_distribution<double> unif(-ctx.cfg.prior_half_width, ctx.cfg.prior_half_width);
  rec.true_w.resize(d);
  for (Index j = 0; j < d; ++j) rec.true_w(j) = unif(truth_rng);

  OracleConfig oracle;
  oracle.noise_family = ctx.cfg.noise_family;
  oracle.scheme = ctx.oracle_scheme;
  oracle.true_w = rec.true_w;
  oracle.seed = derive_seed(rec.trial_seed, hash_label("oracle"), hash_label(id.label));
  Rng oracle_rng = make_rng(oracle.seed);

  try {
    switch (id.family) {
      case StrategyId::Family::bayesian: run_bayesian(ctx, id, rec, oracle, oracle_rng); break;
      case StrategyId::Family::actrank: run_actrank(ctx, id, rec, oracle, oracle_rng); break;
      case StrategyId::Family::gausscloud: run_gausscloud(ctx, id, rec, oracle, oracle_rng); break;
    }
  } catch (const Error& e) {
    rec.aborted = true;
    rec.abort_reason = e.what();
    rec.mse.clear();
    rec.tau.clear();
    rec.wall_ms.clear();
  }
  return rec;
}

void aggregate(ExperimentResult& res) {
  for (const std::string& label : res.config.strategies) {
    for (int i = 0; i < res.config.queries; ++i) {
      AggregateRow row;
      row.strategy = label;
      row.query_index = i + 1;
      std::vector<double> m, t;
      for (const TrialRecord& rec : res.trials) {
        if (rec.strategy != label || rec.aborted) continue;
        m.push_back(rec.mse[static_cast<std::size_t>(i)]);
        t.push_back(rec.tau[static_cast<std::size_t>(i)]);
      }
      row.trials = static_cast<int>(m.size());
      auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
        const auto n = static_cast<double>(v.size());
        mean = se = 0.0;
        if (v.empty()) return;
        for (double x : v) mean += x;
        mean /= n;
        if (v.size() < 2) return;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / (n - 1.0) / n);
      };
      mean_se(m, row.mse_mean, row.mse_se);
      mean_se(t, row.tau_mean, row.tau_se);
      res.aggregates.push_back(row);
    }
  }
}

}  // namespace

StrategyId parse_strategy_id(const std::string& label) {
  StrategyId id;
  id.label = label;
  if (label.rfind("gausscloud-", 0) == 0) {
    id.family = StrategyId::Family::gausscloud;
    id.param = parse_suffix(label, 11);
    if (id.param < 1) throw ArgumentError("gausscloud needs at least one stage: " + label);
  } else if (label.rfind("actrank-", 0) == 0) {
    id.family = StrategyId::Family::actrank;
    id.param = parse_suffix(label, 8);
    if (id.param < 1 || id.param % 2 == 0) throw ArgumentError("actrank repetitions must be odd: " + label);
  } else {
    id.kind = parse_strategy_kind(label);
  }
  return id;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ArgumentError("experiment config must be an object");
  try {
    cfg.experiment_id = j.value("experiment_id", cfg.experiment_id);
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      if (e.is_string()) {
        cfg.embedding_path = e.get<std::string>();
      } else {
        cfg.embedding_path = e.at("path").get<std::string>();
        cfg.prepare_embedding = e.value("prepare", true);
      }
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      cfg.synthetic.n = s.value("n", cfg.synthetic.n);
      cfg.synthetic.d = s.value("d", cfg.synthetic.d);
      cfg.synthetic.seed = s.value("seed", cfg.synthetic.seed);
    }
    if (j.contains("strategies")) cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
    if (j.contains("noise_family")) cfg.noise_family = parse_noise_family(j.at("noise_family").get<std::string>());
    if (j.contains("scheme")) cfg.scheme = parse_noise_scheme(j.at("scheme").get<std::string>());
    cfg.k0 = j.value("k0", cfg.k0);
    if (j.contains("fit_k0")) {
      const auto& f = j.at("fit_k0");
      cfg.fit_k0_triplets = f.at("triplets").get<std::string>();
      cfg.k0_max = f.value("k0_max", cfg.k0_max);
    }
    if (j.contains("oracle_scheme")) cfg.oracle_scheme = parse_noise_scheme(j.at("oracle_scheme").get<std::string>());
    if (j.contains("oracle_k0")) cfg.oracle_k0 = j.at("oracle_k0").get<double>();
    cfg.trials = j.value("trials", cfg.trials);
    cfg.queries = j.value("queries", cfg.queries);
    cfg.samples = j.value("samples", cfg.samples);
    if (j.contains("beta") && !j.at("beta").is_null()) cfg.beta = j.at("beta").get<double>();
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.prior_half_width = j.value("prior_half_width", cfg.prior_half_width);
    if (j.contains("ranking")) {
      const auto& r = j.at("ranking");
      cfg.ranking_batch_size = r.value("batch_size", cfg.ranking_batch_size);
      cfg.ranking_batches = r.value("batches", cfg.ranking_batches);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      cfg.sampler.chains = s.value("chains", cfg.sampler.chains);
      cfg.sampler.burn_in_per_dim = s.value("burn_in_per_dim", cfg.sampler.burn_in_per_dim);
      cfg.sampler.initial_thin = s.value("initial_thin", cfg.sampler.initial_thin);
      cfg.sampler.max_thin = s.value("max_thin", cfg.sampler.max_thin);
      cfg.sampler.target_acceptance = s.value("target_acceptance", cfg.sampler.target_acceptance);
      cfg.sampler.min_ess_fraction = s.value("min_ess_fraction", cfg.sampler.min_ess_fraction);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad experiment config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment_id"] = cfg.experiment_id;
  if (cfg.embedding_path) {
    j["embedding"] = {{"path", *cfg.embedding_path}, {"prepare", cfg.prepare_embedding}};
  } else {
    j["synthetic"] = {{"n", cfg.synthetic.n}, {"d", cfg.synthetic.d}, {"seed", cfg.synthetic.seed}};
  }
  j["strategies"] = cfg.strategies;
  j["noise_family"] = std::string(to_string(cfg.noise_family));
  j["scheme"] = std::string(to_string(cfg.scheme));
  j["k0"] = cfg.k0;
  if (cfg.fit_k0_triplets) j["fit_k0"] = {{"triplets", *cfg.fit_k0_triplets}, {"k0_max", cfg.k0_max}};
  if (cfg.oracle_scheme) j["oracle_scheme"] = std::string(to_string(*cfg.oracle_scheme));
  if (cfg.oracle_k0) j["oracle_k0"] = *cfg.oracle_k0;
  j["trials"] = cfg.trials;
  j["queries"] = cfg.queries;
  j["samples"] = cfg.samples;
  j["beta"] = cfg.beta ? nlohmann::json(*cfg.beta) : nlohmann::json(nullptr);
  j["lambda"] = cfg.lambda;
  j["prior_half_width"] = cfg.prior_half_width;
  j["ranking"] = {{"batch_size", cfg.ranking_batch_size}, {"batches", cfg.ranking_batches}};
  j["seed"] = cfg.seed;
  j["sampler"] = {{"chains", cfg.sampler.chains},
                  {"burn_in_per_dim", cfg.sampler.burn_in_per_dim},
                  {"initial_thin", cfg.sampler.initial_thin},
                  {"max_thin", cfg.sampler.max_thin},
                  {"target_acceptance", cfg.sampler.target_acceptance},
                  {"min_ess_fraction", cfg.sampler.min_ess_fraction}};
  return j;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ArgumentError("trials must be >= 1");
  if (cfg.queries < 1) throw ArgumentError("queries must be >= 1");
  if (cfg.strategies.empty()) throw ArgumentError("no strategies configured");
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
    parse_strategy_id(cfg.strategies[i]);
    if (std::find(cfg.strategies.begin(), cfg.strategies.begin() + static_cast<std::ptrdiff_t>(i),
                  cfg.strategies[i]) != cfg.strategies.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw ArgumentError("duplicate strategy: " + cfg.strategies[i]);
    }
  }
  if (!cfg.embedding_path && (cfg.synthetic.n < 2 || cfg.synthetic.d < 1)) {
    throw ArgumentError("synthetic embedding needs n >= 2 and d >= 1");
  }
  if (!(cfg.k0 >= 0.0) || !std::isfinite(cfg.k0)) throw ArgumentError("k0 must be finite and >= 0");
  if (cfg.oracle_k0 && !(*cfg.oracle_k0 >= 0.0)) throw ArgumentError("oracle_k0 must be >= 0");
  if (cfg.samples < kMinSampleCount) throw ArgumentError("samples must be >= 100");
  if (cfg.beta && !(*cfg.beta > 0.0 && *cfg.beta <= 1.0)) throw ArgumentError("beta must lie in (0, 1]");
  if (!(cfg.lambda >= 0.0)) throw ArgumentError("lambda must be >= 0");
  if (!(cfg.prior_half_width > 0.0)) throw ArgumentError("prior_half_width must be > 0");
  if (cfg.ranking_batch_size < 2 || cfg.ranking_batches < 1) throw ArgumentError("invalid ranking parameters");
  if (cfg.threads < 1) throw ArgumentError("threads must be >= 1");
}

const AggregateRow& ExperimentResult::aggregate(const std::string& strategy, int query_index) const {
  for (const AggregateRow& row : aggregates) {
    if (row.strategy == strategy && row.query_index == query_index) return row;
  }
  throw ArgumentError("no aggregate for " + strategy + " at query " + std::to_string(query_index));
}

Embedding generate_synthetic_embedding(Index n, Index d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw ArgumentError("synthetic embedding needs n >= 2 and d >= 1");
  Rng rng = make_rng(seed, hash_label("synthetic"));
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix items(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) items(i, j) = normal(rng);
  }
  return prepare_embedding(make_embedding(std::move(items)));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::shared_ptr<const Embedding> e;
  if (cfg.embedding_path) {
    Embedding raw = load_embedding_file(*cfg.embedding_path);
    e = std::make_shared<const Embedding>(cfg.prepare_embedding ? prepare_embedding(raw) : std::move(raw));
  } else {
    e = std::make_shared<const Embedding>(
        generate_synthetic_embedding(cfg.synthetic.n, cfg.synthetic.d, cfg.synthetic.seed));
  }
  return run_experiment(cfg, std::move(e));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const Embedding> embedding) {
  validate(cfg);
  ExperimentResult res;
  res.config = cfg;
  res.dim = embedding->dim();

  const NoiseScheme oracle_scheme = cfg.oracle_scheme.value_or(cfg.scheme);
  res.k0 = cfg.k0;
  res.oracle_k0 = cfg.oracle_k0.value_or(cfg.k0);
  if (cfg.fit_k0_triplets) {
    const auto triplets = load_triplets_file(*cfg.fit_k0_triplets, embedding->size());
    res.k0 = fit_k0(*embedding, triplets, cfg.scheme, cfg.k0_max).k0;
    res.oracle_k0 = cfg.oracle_k0 ? *cfg.oracle_k0
                                  : (oracle_scheme == cfg.scheme
                                         ? res.k0
                                         : fit_k0(*embedding, triplets, oracle_scheme, cfg.k0_max).k0);
  }

  auto pool = std::make_shared<const CandidatePool>(embedding, NoiseSchemeConfig{cfg.scheme, res.k0});
  res.beta = cfg.beta.value_or(default_beta(pool->full_size()));
  const TrialContext ctx{cfg, pool, NoiseSchemeConfig{oracle_scheme, res.oracle_k0}, res.beta};

  std::vector<StrategyId> ids;
  for (const std::string& s : cfg.strategies) ids.push_back(parse_strategy_id(s));
  const std::size_t n_tasks = ids.size() * static_cast<std::size_t>(cfg.trials);
  res.trials.resize(n_tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const std::size_t s = t / static_cast<std::size_t>(cfg.trials);
      const int trial = static_cast<int>(t % static_cast<std::size_t>(cfg.trials));
      res.trials[t] = run_trial(ctx, ids[s], trial);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, cfg.threads));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < std::min(n_threads, n_tasks); ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  for (const TrialRecord& rec : res.trials) res.aborted += rec.aborted;
  res.failed = 5 * res.aborted > static_cast<int>(n_tasks);
  aggregate(res);
  return res;
}

std::string results_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "experiment_id,strategy,trial,query_index,mse,tau\n";
  for (const TrialRecord& rec : result.trials) {
    for (std::size_t i = 0; i < rec.mse.size(); ++i) {
      out << result.config.experiment_id << ',' << rec.strategy << ',' << rec.trial << ',' << i + 1 << ','
          << format_double(rec.mse[i]) << ',' << format_double(rec.tau[i]) << '\n';
    }
  }
  return out.str();
}

std::string summary_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "experiment_id,strategy,query_index,trials,mse_mean,mse_se,tau_mean,tau_se\n";
  for (const AggregateRow& row : result.aggregates) {
    out << result.config.experiment_id << ',' << row.strategy << ',' << row.query_index << ',' << row.trials
        << ',' << format_double(row.mse_mean) << ',' << format_double(row.mse_se) << ','
        << format_double(row.tau_mean) << ',' << format_double(row.tau_se) << '\n';
  }
  return out.str();
}

void write_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << text;
  };
  write("results.csv", results_csv(result));
  write("summary.csv", summary_csv(result));

  std::ostringstream timings;
  timings << "experiment_id,strategy,trial,query_index,wall_ms\n";
  for (const TrialRecord& rec : result.trials) {
    for (std::size_t i = 0; i < rec.wall_ms.size(); ++i) {
      timings << result.config.experiment_id << ',' << rec.strategy << ',' << rec.trial << ',' << i + 1 << ','
              << format_double(rec.wall_ms[i]) << '\n';
    }
  }
  write("timings.csv", timings.str());

  nlohmann::json meta;
  meta["version"] = kVersion;
  meta["config"] = to_json(result.config);
  meta["dim"] = result.dim;
  meta["k0"] = result.k0;
  meta["oracle_k0"] = result.oracle_k0;
  meta["beta"] = result.beta;
  meta["aborted_trials"] = nlohmann::json::array();
  for (const TrialRecord& rec : result.trials) {
    if (rec.aborted) {
      meta["aborted_trials"].push_back({{"strategy", rec.strategy}, {"trial", rec.trial}, {"reason", rec.abort_reason}});
    }
  }
  meta["failed"] = result.failed;
  meta["gausscloud_rule"] = "target drawn from N(estimate, scale^2 I); nearest pool hyperplane; scale halves per stage";
  write("metadata.json", meta.dump(2) + "\n");
}

}  // namespace pairsearch
