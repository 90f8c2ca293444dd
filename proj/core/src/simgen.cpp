#include "biwhiten/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

namespace biwhiten {

namespace {

// splitmix64; doubles as the per-stream bit generator and the finalizer that
// derives independent streams from (seed, lane, i, j).
struct SplitMix64 {
  using result_type = std::uint64_t;
  std::uint64_t state;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  SplitMix64 s{h};
  return s();
}

// Lanes keep the signal draws, the count draws, and the permutation draws on
// disjoint streams even when the caller reuses one seed.
enum Lane : std::uint64_t {
  kLaneBase = 1,
  kLaneRowFactor,
  kLaneColFactor,
  kLaneLeft,
  kLaneRight,
  kLaneStrongRow,
  kLaneStrongCol,
  kLaneCounts,
  kLaneInflate,
  kLanePermute,
};

SplitMix64 stream(std::uint64_t seed, std::uint64_t lane, std::uint64_t i, std::uint64_t j) {
  return SplitMix64{mix(mix(mix(seed, lane), i), j)};
}

double draw_factor(const FactorDist& d, SplitMix64& g) {
  switch (d.kind) {
    case FactorDist::Kind::log_normal: {
      std::normal_distribution<double> z(0.0, 1.0);
      return std::exp(d.p1 * z(g));
    }
    case FactorDist::Kind::exp_uniform: {
      std::uniform_real_distribution<double> u(-d.p1, d.p1);
      return std::exp(u(g));
    }
    case FactorDist::Kind::uniform: {
      if (d.p1 == d.p2) return d.p1;
      std::uniform_real_distribution<double> u(d.p1, d.p2);
      return u(g);
    }
  }
  throw DomainError("draw_factor: unknown factor distribution");
}

double draw_poisson(double mean, SplitMix64& g) {
  if (mean == 0.0) return 0.0;
  std::poisson_distribution<long long> d(mean);
  return static_cast<double>(d(g));
}

double draw_genpoisson(double mean, double eta, SplitMix64& g) {
  // Branching representation: Poisson(mean (1 - eta)) ancestors, each node
  // spawning Poisson(eta) children; the total progeny has mean `mean` and
  // variance mean / (1 - eta)^2.
  long long total = static_cast<long long>(draw_poisson(mean * (1.0 - eta), g));
  long long pending = total;
  while (pending > 0) {
    const long long born =
        static_cast<long long>(draw_poisson(eta * static_cast<double>(pending), g));
    total += born;
    pending = born;
  }
  return static_cast<double>(total);
}

}  // namespace

SignalSpec SignalSpec::low_rank(Index m, Index n, Index r, FactorDist left, FactorDist right,
                                std::optional<double> mean_target) {
  SignalSpec s;
  s.m = m;
  s.n = n;
  s.r = r;
  s.left = left;
  s.right = right;
  s.mean_target = mean_target;
  return s;
}

SignalSpec SignalSpec::full_rank_uniform(Index m, Index n) {
  SignalSpec s;
  s.m = m;
  s.n = n;
  s.r = std::min(m, n);
  s.full_rank = true;
  s.mean_target.reset();
  return s;
}

NoiseFamily NoiseFamily::poisson() { return {Kind::poisson, 0, 0, 0.0}; }

NoiseFamily NoiseFamily::binomial(std::int64_t trials) {
  if (trials < 1) throw DomainError("NoiseFamily: binomial trials must be >= 1");
  return {Kind::binomial, trials, 0, 0.0};
}

NoiseFamily NoiseFamily::negbinomial(std::int64_t failures) {
  if (failures < 1) throw DomainError("NoiseFamily: negbinomial failures must be >= 1");
  return {Kind::negbinomial, 0, failures, 0.0};
}

NoiseFamily NoiseFamily::genpoisson(double dispersion) {
  if (!(dispersion >= 0.0) || !(dispersion < 1.0))
    throw DomainError("NoiseFamily: genpoisson dispersion must lie in [0, 1)");
  return {Kind::genpoisson, 0, 0, dispersion};
}

NoiseFamily::QvfParamsOut NoiseFamily::qvf() const {
  switch (kind) {
    case Kind::poisson:
      return {0.0, 1.0, 0.0};
    case Kind::binomial:
      return {0.0, 1.0, -1.0 / static_cast<double>(trials)};
    case Kind::negbinomial:
      return {0.0, 1.0, 1.0 / static_cast<double>(failures)};
    case Kind::genpoisson: {
      const double b = 1.0 / ((1.0 - dispersion) * (1.0 - dispersion));
      return {0.0, b, 0.0};
    }
  }
  throw DomainError("NoiseFamily: unknown kind");
}

DenseMatrix gen_signal(const SignalSpec& spec, std::uint64_t seed) {
  if (spec.m < 1 || spec.n < 1) throw DomainError("gen_signal: dimensions must be positive");
  if (spec.mean_target && !(*spec.mean_target > 0.0))
    throw DomainError("gen_signal: mean_target must be positive");

  DenseMatrix X;
  if (spec.full_rank) {
    X.resize(spec.m, spec.n);
    for (Index j = 0; j < spec.n; ++j)
      for (Index i = 0; i < spec.m; ++i) {
        auto g = stream(seed, kLaneBase, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
        std::uniform_real_distribution<double> u(1.0, 2.0);
        X(i, j) = u(g);
      }
    Vector rowf(spec.m), colf(spec.n);
    for (Index i = 0; i < spec.m; ++i) {
      auto g = stream(seed, kLaneRowFactor, static_cast<std::uint64_t>(i), 0);
      rowf(i) = draw_factor(FactorDist::exp_uniform(2.0), g);
    }
    for (Index j = 0; j < spec.n; ++j) {
      auto g = stream(seed, kLaneColFactor, 0, static_cast<std::uint64_t>(j));
      colf(j) = draw_factor(FactorDist::exp_uniform(2.0), g);
    }
    X = rowf.asDiagonal() * X * colf.asDiagonal();
  } else {
    if (spec.r < 1 || spec.r > std::min(spec.m, spec.n))
      throw DomainError("gen_signal: rank must satisfy 1 <= r <= min(m, n)");
    DenseMatrix B(spec.m, spec.r), C(spec.r, spec.n);
    for (Index k = 0; k < spec.r; ++k)
      for (Index i = 0; i < spec.m; ++i) {
        auto g = stream(seed, kLaneLeft, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
        B(i, k) = draw_factor(spec.left, g);
      }
    for (Index j = 0; j < spec.n; ++j)
      for (Index k = 0; k < spec.r; ++k) {
        auto g = stream(seed, kLaneRight, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j));
        C(k, j) = draw_factor(spec.right, g);
      }
    X = B * C;
  }

  if (spec.mean_target) X *= *spec.mean_target / X.mean();

  if (spec.strong_factor) {
    Vector p(spec.m), q(spec.n);
    for (Index i = 0; i < spec.m; ++i) {
      auto g = stream(seed, kLaneStrongRow, static_cast<std::uint64_t>(i), 0);
      p(i) = draw_factor(*spec.strong_factor, g);
    }
    for (Index j = 0; j < spec.n; ++j) {
      auto g = stream(seed, kLaneStrongCol, 0, static_cast<std::uint64_t>(j));
      q(j) = draw_factor(*spec.strong_factor, g);
    }
    X += p * q.transpose();
  }

  if (spec.normalize_columns) {
    for (Index j = 0; j < spec.n; ++j) X.col(j) /= X.col(j).sum();
  }
  return X;
}

DenseMatrix sample_counts(const DenseMatrix& X, const NoiseFamily& family, std::uint64_t seed) {
  if (!X.allFinite() || (X.array() < 0.0).any())
    throw DomainError("sample_counts: means must be nonnegative and finite");
  if (family.kind == NoiseFamily::Kind::binomial && (X.array() > 1.0).any())
    throw DomainError("sample_counts: binomial requires success probabilities in [0, 1]");

  DenseMatrix Y(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      auto g = stream(seed, kLaneCounts, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      const double x = X(i, j);
      switch (family.kind) {
        case NoiseFamily::Kind::poisson:
          Y(i, j) = draw_poisson(x, g);
          break;
        case NoiseFamily::Kind::binomial: {
          if (x == 0.0) {
            Y(i, j) = 0.0;
          } else {
            std::binomial_distribution<std::int64_t> d(family.trials, x);
            Y(i, j) = static_cast<double>(d(g));
          }
          break;
        }
        case NoiseFamily::Kind::negbinomial: {
          if (x == 0.0) {
            Y(i, j) = 0.0;
          } else {
            const double rho = static_cast<double>(family.failures);
            std::negative_binomial_distribution<std::int64_t> d(family.failures, rho / (rho + x));
            Y(i, j) = static_cast<double>(d(g));
          }
          break;
        }
        case NoiseFamily::Kind::genpoisson:
          Y(i, j) = draw_genpoisson(x, family.dispersion, g);
          break;
      }
    }
  }
  return Y;
}

DenseMatrix zero_inflate(const DenseMatrix& Y, double p, std::uint64_t seed) {
  if (!(p > 0.0) || !(p <= 1.0))
    throw DomainError("zero_inflate: observation probability must lie in (0, 1]");
  DenseMatrix out = Y;
  if (p == 1.0) return out;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      auto g = stream(seed, kLaneInflate, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(g) >= p) out(i, j) = 0.0;
    }
  return out;
}

DenseMatrix homogenize(const DenseMatrix& Y, const std::vector<int>& labels, std::uint64_t seed) {
  if (static_cast<Index>(labels.size()) != Y.cols())
    throw DomainError("homogenize: need one class label per column");
  std::map<int, std::vector<Index>> classes;
  for (Index j = 0; j < Y.cols(); ++j) classes[labels[static_cast<std::size_t>(j)]].push_back(j);

  DenseMatrix out = Y;
  std::uint64_t class_rank = 0;
  for (const auto& [label, cols] : classes) {
    for (Index i = 0; i < Y.rows(); ++i) {
      std::vector<double> vals;
      vals.reserve(cols.size());
      for (Index j : cols) vals.push_back(Y(i, j));
      auto g = stream(seed, kLanePermute, static_cast<std::uint64_t>(i), class_rank);
      std::shuffle(vals.begin(), vals.end(), g);
      for (std::size_t k = 0; k < cols.size(); ++k) out(i, cols[k]) = vals[k];
    }
    ++class_rank;
  }
  return out;
}

}  // namespace biwhiten
