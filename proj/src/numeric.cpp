#include "pairsearch/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pairsearch/common.hpp"

namespace pairsearch {

double softplus(double x) noexcept {
  if (x > 30.0) return x + std::exp(-x);
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) noexcept { return -softplus(-x); }

double binary_entropy(double p) noexcept {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double binary_entropy_of_logistic(double z) noexcept {
  // -f log f - (1-f) log(1-f) with log f(z) = -softplus(-z), log f(-z) = -softplus(z).
  const double fz = logistic(z);
  const double fmz = logistic(-z);
  return (fz * softplus(-z) + fmz * softplus(z)) / kLn2;
}

GoldenSectionResult golden_section_maximize(const std::function<double(double)>& fn, double lo,
                                            double hi, double rel_tol) {
  if (!(hi >= lo)) throw ArgumentError("golden section: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  int it = 0;
  while ((b - a) > rel_tol * std::max(1.0, std::abs(0.5 * (a + b))) && it < 500) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
    ++it;
  }
  // The endpoints are candidates too: monotone objectives push the optimum
  // onto the box edge and the interior probes never quite reach it.
  GoldenSectionResult best{c, fc, it};
  if (fd > best.value) best = {d, fd, it};
  for (double edge : {lo, hi}) {
    if (std::abs(edge - best.argmax) <= 2.0 * (b - a) + rel_tol) {
      const double fe = fn(edge);
      if (fe >= best.value) best = {edge, fe, it};
    }
  }
  return best;
}

namespace {

double simpson_step(const std::function<double(double)>& fn, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = fn(lm), frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& fn, double lo, double hi,
                        double rel_tol, int max_depth) {
  if (hi == lo) return 0.0;
  const double fa = fn(lo), fb = fn(hi), fm = fn(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  // Seed the absolute tolerance from a coarse estimate of the integral size.
  double scale = std::abs(whole);
  const int probes = 64;
  double coarse = 0.0;
  for (int i = 0; i < probes; ++i) {
    coarse += std::abs(fn(lo + (hi - lo) * (i + 0.5) / probes));
  }
  scale = std::max(scale, coarse * std::abs(hi - lo) / probes);
  const double tol = std::max(rel_tol * scale, std::numeric_limits<double>::min());
  return simpson_step(fn, lo, hi, fa, fm, fb, whole, tol, max_depth);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pairsearch
