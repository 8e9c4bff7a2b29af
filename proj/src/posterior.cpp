#include "pairsearch/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>

namespace pairsearch {

ResponseHistory::ResponseHistory(Index dim, double prior_half_width)
    : dim_(dim), half_width_(prior_half_width) {
  if (dim < 1) throw ArgumentError("history dimension must be positive");
  if (!(prior_half_width > 0.0) || !std::isfinite(prior_half_width)) {
    throw ArgumentError("prior half-width must be a positive finite number");
  }
}

void ResponseHistory::append(PairQuery query, int response) {
  if (query.a.size() != dim_) throw ArgumentError("query dimension does not match history");
  if (response != 0 && response != 1) throw ArgumentError("response must be 0 or 1");
  entries_.push_back({std::move(query), response});
}

bool ResponseHistory::in_prior_support(const Vector& w) const {
  return w.size() == dim_ && w.cwiseAbs().maxCoeff() <= half_width_;
}

double log_posterior(const Vector& w, const ResponseHistory& h) {
  if (!h.in_prior_support(w)) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& obs : h.entries()) {
    const double z = obs.query.k * obs.query.margin(w);
    total += log_logistic(obs.response == 0 ? z : -z);
  }
  return total;
}

PosteriorBatch::PosteriorBatch(RowMatrix samples, std::uint64_t seed, SamplerDiagnostics diagnostics)
    : samples_(std::move(samples)), seed_(seed), diag_(diagnostics) {
  if (samples_.rows() < 1) throw ArgumentError("posterior batch needs at least one sample");
  mean_ = samples_.colwise().mean().transpose();
  const Matrix centered = samples_.rowwise() - mean_.transpose();
  const double denom = samples_.rows() > 1 ? static_cast<double>(samples_.rows() - 1) : 1.0;
  cov_ = (centered.transpose() * centered) / denom;
  cov_ = 0.5 * (cov_ + cov_.transpose());
}

namespace {

constexpr std::uint64_t kChainStream = 0x636861696eULL;  // "chain"

// Likelihood terms folded into z_j = g_j . w - h_j, log p = sum log f(z_j).
struct CompactLikelihood {
  RowMatrix g;
  Vector h;
  double half_width;

  explicit CompactLikelihood(const ResponseHistory& hist)
      : g(static_cast<Index>(hist.size()), hist.dim()),
        h(static_cast<Index>(hist.size())),
        half_width(hist.prior_half_width()) {
    Index j = 0;
    for (const auto& obs : hist.entries()) {
      const double sign = obs.response == 0 ? 1.0 : -1.0;
      g.row(j) = (sign * obs.query.k) * obs.query.a.transpose();
      h(j) = sign * obs.query.k * obs.query.b;
      ++j;
    }
  }

  double operator()(const Vector& w) const {
    for (Index i = 0; i < w.size(); ++i) {
      if (std::abs(w(i)) > half_width) return -std::numeric_limits<double>::infinity();
    }
    double total = 0.0;
    for (Index j = 0; j < g.rows(); ++j) total += log_logistic(g.row(j).dot(w) - h(j));
    return total;
  }
};

struct ChainResult {
  RowMatrix draws;
  long long accepted = 0;
  long long steps = 0;
};

class Welford {
 public:
  explicit Welford(Index d) : mean_(Vector::Zero(d)), m2_(Matrix::Zero(d, d)) {}
  void add(const Vector& x) {
    ++n_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_).transpose();
  }
  long long count() const { return n_; }
  Matrix covariance() const { return m2_ / static_cast<double>(std::max<long long>(1, n_ - 1)); }

 private:
  long long n_ = 0;
  Vector mean_;
  Matrix m2_;
};

ChainResult run_chain(const CompactLikelihood& target, Index dim, Index n_draws, int thin,
                      const SamplerOptions& opt, Rng& rng) {
  const double r = target.half_width;
  std::uniform_real_distribution<double> box(-r, r);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Start from the best of a handful of prior draws.
  Vector w(dim);
  double lp = -std::numeric_limits<double>::infinity();
  Vector cand(dim);
  for (int c = 0; c < std::max(1, opt.init_candidates); ++c) {
    for (Index i = 0; i < dim; ++i) cand(i) = box(rng);
    const double lc = target(cand);
    if (lc > lp) {
      lp = lc;
      w = cand;
    }
  }

  Matrix chol = Matrix::Identity(dim, dim) * (r / std::sqrt(3.0));
  const double base_log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
  double log_scale = base_log_scale - std::log(4.0);

  Vector z(dim), prop(dim);
  auto step = [&]() -> bool {
    for (Index i = 0; i < dim; ++i) z(i) = normal(rng);
    prop.noalias() = chol.triangularView<Eigen::Lower>() * z;
    prop = w + std::exp(log_scale) * prop;
    const double lq = target(prop);
    if (lq == -std::numeric_limits<double>::infinity()) return false;
    if (lq >= lp || unit(rng) < std::exp(lq - lp)) {
      w = prop;
      lp = lq;
      return true;
    }
    return false;
  };

  ChainResult out;
  const long long burn_in = static_cast<long long>(opt.burn_in_per_dim) * dim;
  long long window_len = 100;
  long long window_end = std::min(window_len, burn_in);
  long long window_start = 0;
  Welford window(dim);
  long long window_accepts = 0;
  for (long long t = 0; t < burn_in; ++t) {
    const bool acc = step();
    window_accepts += acc;
    window.add(w);
    const double gain = 1.0 / std::pow(1.0 + static_cast<double>(t - window_start), 0.6);
    log_scale += gain * ((acc ? 1.0 : 0.0) - opt.target_acceptance);
    if (t + 1 == window_end) {
      if (window_accepts >= 10) {
        Matrix cov = window.covariance();
        cov += Matrix::Identity(dim, dim) * (1e-12 * std::max(cov.trace(), 1e-300));
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) {
          chol = llt.matrixL();
          log_scale = base_log_scale;
        }
      }
      window = Welford(dim);
      window_accepts = 0;
      window_start = t + 1;
      window_len *= 2;
      window_end = std::min(burn_in, t + 1 + window_len);
    }
  }

  out.draws.resize(n_draws, dim);
  for (Index s = 0; s < n_draws; ++s) {
    for (int t = 0; t < thin; ++t) out.accepted += step();
    out.draws.row(s) = w.transpose();
  }
  out.steps = burn_in + static_cast<long long>(n_draws) * thin;
  return out;
}

}  // namespace

double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - mean) * (chain[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return 0.0;
  double sum_pairs = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum_pairs += pair;
  }
  const double tau = std::max(1.0, (-g0 + 2.0 * sum_pairs) / g0);
  return static_cast<double>(n) / tau;
}

PosteriorBatch AdaptiveMetropolisSampler::sample(const ResponseHistory& h, Index count,
                                                 std::uint64_t seed) const {
  if (count < kMinSampleCount) {
    throw ArgumentError("posterior sampling needs at least " + std::to_string(kMinSampleCount) +
                        " samples");
  }
  const SamplerOptions& opt = options_;
  const int chains = std::max(1, opt.chains);
  const Index dim = h.dim();
  const CompactLikelihood target(h);

  SamplerDiagnostics diag;
  diag.chains = chains;
  for (int thin = std::max(1, opt.initial_thin); thin <= opt.max_thin; thin *= 2) {
    RowMatrix all(count, dim);
    Index row = 0;
    long long accepted = 0, sampling_steps = 0, total_steps = 0;
    Vector ess = Vector::Zero(dim);
    for (int c = 0; c < chains; ++c) {
      const Index n_c = count / chains + (c < count % chains ? 1 : 0);
      if (n_c == 0) continue;
      Rng rng = make_rng(seed, kChainStream, static_cast<std::uint64_t>(c));
      ChainResult res = run_chain(target, dim, n_c, thin, opt, rng);
      all.middleRows(row, n_c) = res.draws;
      row += n_c;
      accepted += res.accepted;
      sampling_steps += static_cast<long long>(n_c) * thin;
      total_steps += res.steps;
      for (Index j = 0; j < dim; ++j) {
        std::vector<double> col(static_cast<std::size_t>(n_c));
        for (Index s = 0; s < n_c; ++s) col[static_cast<std::size_t>(s)] = res.draws(s, j);
        ess(j) += effective_sample_size(col);
      }
    }
    diag.ess = ess.minCoeff();
    diag.acceptance_rate =
        sampling_steps > 0 ? static_cast<double>(accepted) / static_cast<double>(sampling_steps) : 0.0;
    diag.thin = thin;
    diag.total_steps += total_steps;
    if (diag.ess >= opt.min_ess_fraction * static_cast<double>(count)) {
      return PosteriorBatch(std::move(all), seed, diag);
    }
  }
  throw ConvergenceError("posterior sampler did not reach the ESS floor (ess=" +
                             std::to_string(diag.ess) + ", thin=" + std::to_string(diag.thin) + ")",
                         diag);
}

PosteriorBatch sample_posterior(const ResponseHistory& h, Index count, std::uint64_t seed,
                                const SamplerOptions& options) {
  return AdaptiveMetropolisSampler(options).sample(h, count, seed);
}

void write_batch(std::ostream& out, const PosteriorBatch& batch) {
  out << std::setprecision(17);
  const auto& s = batch.samples();
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = 0; j < s.cols(); ++j) {
      if (j) out << ',';
      out << s(i, j);
    }
    out << '\n';
  }
}

}  // namespace pairsearch
