#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pairsearch/common.hpp"
#include "pairsearch/response_model.hpp"

namespace pairsearch {

/// Item coordinates in R^d, one item per row, plus the affine preparation
/// that has been applied to them.
struct Embedding {
  RowMatrix items;
  double scale_applied = 1.0;
  Vector centroid_removed;

  Index size() const noexcept { return items.rows(); }
  Index dim() const noexcept { return items.cols(); }
  Vector item(Index i) const { return items.row(i).transpose(); }
};

/// A similarity judgement: which of two candidates is closer to a reference.
/// choice == 0 means candidate_a was judged closer.
struct Triplet {
  Index reference = 0;
  Index candidate_a = 0;
  Index candidate_b = 0;
  int choice = 0;
};

/// Parses delimited text (commas and/or whitespace), one item per line.
/// A first line containing a non-numeric token is treated as a header.
/// Blank lines and lines starting with '#' are skipped.
Embedding load_embedding(std::istream& in);
Embedding load_embedding_file(const std::string& path);
Embedding make_embedding(RowMatrix items);

void write_embedding(std::ostream& out, const Embedding& e);

/// Centers the items and rescales them so that the smallest eigenvalue of
/// the item covariance (1/N normalization) becomes d/9.
Embedding prepare_embedding(const Embedding& e);

/// Covariance with 1/N normalization.
Matrix item_covariance(const RowMatrix& items);

std::vector<Triplet> load_triplets(std::istream& in, Index n_items);
std::vector<Triplet> load_triplets_file(const std::string& path, Index n_items);

/// Fraction of triplets whose recorded choice disagrees with the closer
/// candidate under embedding distances. Exact distance ties count as wrong.
double triplet_error_fraction(const Embedding& e, std::span<const Triplet> triplets);

/// Sum over triplets of log P(recorded choice) under the logistic response
/// model with the reference item standing in for the user point.
double triplet_log_likelihood(const Embedding& e, std::span<const Triplet> triplets,
                              const NoiseSchemeConfig& scheme);

inline constexpr double kDefaultK0Max = 1e4;

struct K0Fit {
  double k0;
  double log_likelihood;
};

/// Maximum-likelihood k0 for the given scheme over [0, k0_max].
K0Fit fit_k0(const Embedding& e, std::span<const Triplet> triplets, NoiseScheme scheme,
             double k0_max = kDefaultK0Max);

}  // namespace pairsearch
