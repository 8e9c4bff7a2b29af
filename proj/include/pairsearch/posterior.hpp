#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "pairsearch/common.hpp"
#include "pairsearch/response_model.hpp"

namespace pairsearch {

struct Observation {
  PairQuery query;
  int response = 0;  // 0: p preferred, 1: q preferred
};

/// The observed responses plus the uniform hypercube prior [-r, r]^d.
/// Entries are append-only.
class ResponseHistory {
 public:
  explicit ResponseHistory(Index dim, double prior_half_width = 1.0);

  void append(PairQuery query, int response);

  Index dim() const noexcept { return dim_; }
  double prior_half_width() const noexcept { return half_width_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Observation>& entries() const noexcept { return entries_; }

  bool in_prior_support(const Vector& w) const;

 private:
  Index dim_;
  double half_width_;
  std::vector<Observation> entries_;
};

/// Unnormalized log posterior; -infinity outside the prior box.
double log_posterior(const Vector& w, const ResponseHistory& h);

/// Sampler diagnostics carried with every batch.
struct SamplerDiagnostics {
  double ess = 0.0;
  double acceptance_rate = 0.0;
  int thin = 0;
  int chains = 0;
  long long total_steps = 0;
};

/// S posterior draws with their empirical moments. Immutable once built.
class PosteriorBatch {
 public:
  PosteriorBatch() = default;
  PosteriorBatch(RowMatrix samples, std::uint64_t seed, SamplerDiagnostics diagnostics = {});

  const RowMatrix& samples() const noexcept { return samples_; }
  const Vector& mean() const noexcept { return mean_; }
  /// Sample covariance with 1/(S-1) normalization.
  const Matrix& covariance() const noexcept { return cov_; }
  Index size() const noexcept { return samples_.rows(); }
  Index dim() const noexcept { return samples_.cols(); }
  double ess() const noexcept { return diag_.ess; }
  std::uint64_t seed() const noexcept { return seed_; }
  const SamplerDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  RowMatrix samples_;
  Vector mean_;
  Matrix cov_;
  std::uint64_t seed_ = 0;
  SamplerDiagnostics diag_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, SamplerDiagnostics diag)
      : Error(what), diag_(diag) {}
  const SamplerDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  SamplerDiagnostics diag_;
};

struct SamplerOptions {
  int chains = 2;
  int burn_in_per_dim = 1000;
  int initial_thin = 16;
  int max_thin = 512;
  double target_acceptance = 0.3;
  double min_ess_fraction = 0.1;
  int init_candidates = 256;
};

/// Interface so that other samplers for log-concave targets can be swapped in.
class PosteriorSampler {
 public:
  virtual ~PosteriorSampler() = default;
  virtual PosteriorBatch sample(const ResponseHistory& h, Index count, std::uint64_t seed) const = 0;
};

/// Random-walk Metropolis whose Gaussian proposal is adapted during burn-in
/// to the running sample covariance, then frozen. Independent chains are
/// merged in chain order.
class AdaptiveMetropolisSampler final : public PosteriorSampler {
 public:
  explicit AdaptiveMetropolisSampler(SamplerOptions options = {}) : options_(options) {}
  PosteriorBatch sample(const ResponseHistory& h, Index count, std::uint64_t seed) const override;
  const SamplerOptions& options() const noexcept { return options_; }

 private:
  SamplerOptions options_;
};

inline constexpr Index kDefaultSampleCount = 1000;
inline constexpr Index kMinSampleCount = 100;

/// Draws `count` samples with the default adaptive Metropolis sampler.
PosteriorBatch sample_posterior(const ResponseHistory& h, Index count, std::uint64_t seed,
                                const SamplerOptions& options = {});

/// Effective sample size of a single chain via Geyer's initial monotone
/// sequence estimator of the integrated autocorrelation time.
double effective_sample_size(std::span<const double> chain);

/// Batch dump for offline diagnostics: one sample per line, comma separated.
void write_batch(std::ostream& out, const PosteriorBatch& batch);

// Entropy ------------------------------------------------------------------

/// Kozachenko-Leonenko k-nearest-neighbour differential entropy in bits.
/// Samples are whitened with their own covariance first and the log
/// determinant added back, so the estimate is affine-equivariant.
double knn_entropy_bits(const RowMatrix& samples, int neighbours = 3);

/// Entropy estimate of a posterior batch (S >= 500); used only to check the
/// entropy/volume bounds, never for choosing queries.
double posterior_entropy_estimate(const PosteriorBatch& batch, int neighbours = 3);

}  // namespace pairsearch
