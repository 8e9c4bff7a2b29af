#include "pairsearch/embedding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

namespace pairsearch {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r' || ch == ';') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  // strtod accepts "nan"/"inf"; those parse but are rejected later as
  // non-finite so the error names the row instead of calling it a header.
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

Embedding make_embedding(RowMatrix items) {
  if (items.rows() < 2) throw ArgumentError("embedding needs at least 2 items");
  if (items.cols() < 2) throw ArgumentError("embedding needs dimension >= 2");
  if (!items.allFinite()) throw ArgumentError("embedding has non-finite coordinates");
  Embedding e;
  e.centroid_removed = Vector::Zero(items.cols());
  e.items = std::move(items);
  return e;
}

Embedding load_embedding(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_first = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (!seen_first) {
        seen_first = true;  // header
        continue;
      }
      throw FormatError("non-numeric field", line_no);
    }
    seen_first = true;
    for (double v : row) {
      if (!std::isfinite(v)) throw FormatError("non-finite coordinate", line_no);
    }
    if (row.size() < 2) throw FormatError("need at least 2 columns", line_no);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged row: expected " + std::to_string(rows.front().size()) +
                            " columns, got " + std::to_string(row.size()),
                        line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw FormatError("embedding needs at least 2 items", line_no);
  RowMatrix items(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < items.rows(); ++i) {
    for (Index j = 0; j < items.cols(); ++j) items(i, j) = rows[i][j];
  }
  return make_embedding(std::move(items));
}

Embedding load_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open embedding file '" + path + "'");
  return load_embedding(in);
}

void write_embedding(std::ostream& out, const Embedding& e) {
  out << std::setprecision(17);
  for (Index i = 0; i < e.size(); ++i) {
    for (Index j = 0; j < e.dim(); ++j) {
      if (j) out << ',';
      out << e.items(i, j);
    }
    out << '\n';
  }
}

Matrix item_covariance(const RowMatrix& items) {
  const Vector mean = items.colwise().mean().transpose();
  const Matrix centered = items.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(items.rows());
}

Embedding prepare_embedding(const Embedding& e) {
  const Vector mean = e.items.colwise().mean().transpose();
  RowMatrix centered = e.items.rowwise() - mean.transpose();
  const Matrix cov = item_covariance(centered);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  const double smallest = es.eigenvalues()(0);
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (!(smallest > tol)) throw DegenerateError("item covariance is singular");
  const double d = static_cast<double>(e.dim());
  const double s = std::sqrt(d) / (3.0 * std::sqrt(smallest));
  Embedding out;
  out.items = centered * s;
  out.scale_applied = e.scale_applied * s;
  // Original coordinates x map to (x - centroid_removed) * scale_applied.
  out.centroid_removed = e.centroid_removed + mean / e.scale_applied;
  return out;
}

std::vector<Triplet> load_triplets(std::istream& in, Index n_items) {
  std::vector<Triplet> out;
  std::string line;
  std::size_t line_no = 0;
  bool seen_first = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    std::vector<long long> vals;
    bool numeric = true;
    for (const auto& f : fields) {
      long long v = 0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (!seen_first) {
        seen_first = true;
        continue;
      }
      throw FormatError("non-integer field in triplet", line_no);
    }
    seen_first = true;
    if (vals.size() != 3 && vals.size() != 4) {
      throw FormatError("triplet needs 3 or 4 columns", line_no);
    }
    Triplet t{static_cast<Index>(vals[0]), static_cast<Index>(vals[1]),
              static_cast<Index>(vals[2]), vals.size() == 4 ? static_cast<int>(vals[3]) : 0};
    for (Index idx : {t.reference, t.candidate_a, t.candidate_b}) {
      if (idx < 0 || idx >= n_items) throw FormatError("triplet index out of range", line_no);
    }
    if (t.reference == t.candidate_a || t.reference == t.candidate_b ||
        t.candidate_a == t.candidate_b) {
      throw FormatError("triplet indices must be distinct", line_no);
    }
    if (t.choice != 0 && t.choice != 1) throw FormatError("triplet choice must be 0 or 1", line_no);
    out.push_back(t);
  }
  return out;
}

std::vector<Triplet> load_triplets_file(const std::string& path, Index n_items) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open triplet file '" + path + "'");
  return load_triplets(in, n_items);
}

namespace {

void check_triplets(const Embedding& e, std::span<const Triplet> triplets) {
  if (triplets.empty()) throw ArgumentError("triplet list is empty");
  for (const auto& t : triplets) {
    for (Index idx : {t.reference, t.candidate_a, t.candidate_b}) {
      if (idx < 0 || idx >= e.size()) throw ArgumentError("triplet index out of range");
    }
    if (t.reference == t.candidate_a || t.reference == t.candidate_b ||
        t.candidate_a == t.candidate_b) {
      throw ArgumentError("triplet indices must be distinct");
    }
  }
}

}  // namespace

double triplet_error_fraction(const Embedding& e, std::span<const Triplet> triplets) {
  check_triplets(e, triplets);
  std::size_t wrong = 0;
  for (const auto& t : triplets) {
    const double da = (e.items.row(t.reference) - e.items.row(t.candidate_a)).squaredNorm();
    const double db = (e.items.row(t.reference) - e.items.row(t.candidate_b)).squaredNorm();
    int predicted;
    if (da < db) {
      predicted = 0;
    } else if (db < da) {
      predicted = 1;
    } else {
      ++wrong;
      continue;
    }
    if (predicted != t.choice) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(triplets.size());
}

double triplet_log_likelihood(const Embedding& e, std::span<const Triplet> triplets,
                              const NoiseSchemeConfig& scheme) {
  check_triplets(e, triplets);
  double total = 0.0;
  for (const auto& t : triplets) {
    const Vector w = e.item(t.reference);
    const Vector p = e.item(t.candidate_a);
    const Vector q = e.item(t.candidate_b);
    const Vector a = 2.0 * (p - q);
    const double k = noise_constant(scheme, a.norm());
    const double z = k * (a.dot(w) - (p.squaredNorm() - q.squaredNorm()));
    total += log_logistic(t.choice == 0 ? z : -z);
  }
  return total;
}

K0Fit fit_k0(const Embedding& e, std::span<const Triplet> triplets, NoiseScheme scheme,
             double k0_max) {
  check_triplets(e, triplets);
  if (!(k0_max > 0.0) || !std::isfinite(k0_max)) throw ArgumentError("k0_max must be positive");
  // Per-triplet signed signal at k0 = 1; the likelihood is then a sum of
  // log f(k0 * s_i), concave in k0.
  std::vector<double> unit_signal;
  unit_signal.reserve(triplets.size());
  const NoiseSchemeConfig unit{scheme, 1.0};
  for (const auto& t : triplets) {
    const Vector w = e.item(t.reference);
    const Vector p = e.item(t.candidate_a);
    const Vector q = e.item(t.candidate_b);
    const Vector a = 2.0 * (p - q);
    const double k = noise_constant(unit, a.norm());
    const double z = k * (a.dot(w) - (p.squaredNorm() - q.squaredNorm()));
    unit_signal.push_back(t.choice == 0 ? z : -z);
  }
  auto loglik = [&](double k0) {
    double s = 0.0;
    for (double z : unit_signal) s += log_logistic(k0 * z);
    if (!std::isfinite(s)) throw NumericError("non-finite triplet log-likelihood");
    return s;
  };
  const auto best = golden_section_maximize(loglik, 0.0, k0_max, 1e-6);
  return {best.argmax, best.value};
}

}  // namespace pairsearch
