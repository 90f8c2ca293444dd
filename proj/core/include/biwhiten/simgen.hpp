#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "biwhiten/types.hpp"

namespace biwhiten {

// Distribution of the entries of a signal factor.
struct FactorDist {
  enum class Kind { log_normal, exp_uniform, uniform };
  Kind kind;
  double p1 = 0.0;
  double p2 = 0.0;

  // exp(s Z), Z standard normal
  static FactorDist log_normal(double s) { return {Kind::log_normal, s, 0.0}; }
  // exp(Unif(-h, h))
  static FactorDist exp_uniform(double h) { return {Kind::exp_uniform, h, 0.0}; }
  static FactorDist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
};

// Recipe for a strictly positive signal matrix. The default low-rank form is
// X = B C with B (m x r) drawn from `left` and C (r x n) from `right`,
// rescaled so the mean entry hits mean_target (when set). An optional strong
// rank-1 factor p q^T is added after normalization, so the signal rank
// becomes r + 1 and the spike is excluded from the mean. The full-rank form
// draws Unif(1, 2) entries and scales rows and columns by independent
// exp(Unif(-2, 2)) factors.
struct SignalSpec {
  Index m = 0;
  Index n = 0;
  Index r = 1;
  FactorDist left = FactorDist::log_normal(2.0);
  FactorDist right = FactorDist::uniform(0.0, 1.0);
  std::optional<double> mean_target = 1.0;
  std::optional<FactorDist> strong_factor;
  bool full_rank = false;
  bool normalize_columns = false;  // unit column sums (success-probability matrices)

  static SignalSpec low_rank(Index m, Index n, Index r, FactorDist left, FactorDist right,
                             std::optional<double> mean_target = 1.0);
  static SignalSpec full_rank_uniform(Index m, Index n);
};

// Entrywise count-noise family applied on top of a signal matrix.
struct NoiseFamily {
  enum class Kind { poisson, binomial, negbinomial, genpoisson };
  Kind kind = Kind::poisson;
  std::int64_t trials = 0;    // binomial
  std::int64_t failures = 0;  // negbinomial
  double dispersion = 0.0;    // genpoisson, in [0, 1)

  static NoiseFamily poisson();
  static NoiseFamily binomial(std::int64_t trials);
  static NoiseFamily negbinomial(std::int64_t failures);
  static NoiseFamily genpoisson(double dispersion);

  // QVF coefficients of the family (with X = E[Y]).
  struct QvfParamsOut {
    double a, b, c;
  };
  QvfParamsOut qvf() const;
};

// Draws the signal matrix for a spec. Identical (spec, seed) pairs reproduce
// identical matrices; entries are generated from independent counter-based
// streams, so the result does not depend on evaluation order.
DenseMatrix gen_signal(const SignalSpec& spec, std::uint64_t seed);

// Samples independent counts with E[Y_ij] = X_ij (Poisson, negative binomial,
// generalized Poisson) or E[Y_ij] = trials * X_ij (binomial, where X holds
// success probabilities in [0, 1]).
DenseMatrix sample_counts(const DenseMatrix& X, const NoiseFamily& family, std::uint64_t seed);

// Applies independent zero-inflation: each entry is kept with probability p
// and replaced by zero otherwise.
DenseMatrix zero_inflate(const DenseMatrix& Y, double p, std::uint64_t seed);

// Within every (row, class) group, uniformly permutes the entries across the
// columns of the class. Multisets per group are preserved exactly.
DenseMatrix homogenize(const DenseMatrix& Y, const std::vector<int>& labels, std::uint64_t seed);

}  // namespace biwhiten
