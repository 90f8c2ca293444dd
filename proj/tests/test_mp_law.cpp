#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "biwhiten/biwhiten.hpp"
#include "biwhiten/mp_law.hpp"
#include "biwhiten/scaling.hpp"
#include "biwhiten/simgen.hpp"

using namespace biwhiten;

namespace {

// Independent midpoint-rule integration of the density under the sin^2
// substitution; deliberately avoids the adaptive quadrature inside mp_cdf.
double cdf_by_riemann(const MpLaw& law, double tau, int points = 400000) {
  const double bm = law.beta_minus();
  const double bp = law.beta_plus();
  if (tau <= bm) return 0.0;
  if (tau >= bp) return 1.0;
  const double width = bp - bm;
  const double theta_max = std::asin(std::sqrt((tau - bm) / width));
  const double s2 = law.sigma * law.sigma;
  double sum = 0.0;
  for (int k = 0; k < points; ++k) {
    const double theta = (k + 0.5) * theta_max / points;
    const double st = std::sin(theta);
    const double s2t = std::sin(2.0 * theta);
    const double t = bm + width * st * st;
    sum += width * width * s2t * s2t / (4.0 * std::numbers::pi * s2 * law.gamma * t);
  }
  return sum * theta_max / points;
}

double mp_quantile(const MpLaw& law, double p) {
  double lo = law.beta_minus(), hi = law.beta_plus();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mp_cdf(law, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Esd quantile_esd(const MpLaw& law, Index m, Index n) {
  std::vector<double> eigs(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k)
    eigs[static_cast<std::size_t>(k)] =
        mp_quantile(law, (static_cast<double>(m - k) - 0.5) / static_cast<double>(m));
  return Esd(std::move(eigs), m, n);
}

}  // namespace

TEST_CASE("mp_edges closed forms") {
  const auto [lo1, hi1] = mp_edges(MpLaw(1.0, 1.0));
  CHECK(lo1 == doctest::Approx(0.0).epsilon(0).scale(1));
  CHECK(hi1 == doctest::Approx(4.0));

  const auto [lo2, hi2] = mp_edges(MpLaw(0.25, 1.0));
  CHECK(lo2 == doctest::Approx(0.25));
  CHECK(hi2 == doctest::Approx(2.25));

  // sigma^2 (1 -+ sqrt(0.5))^2 with sigma = 2, evaluated by hand
  const auto [lo3, hi3] = mp_edges(MpLaw(0.5, 2.0));
  CHECK(lo3 == doctest::Approx(0.3431457505076194).epsilon(1e-14));
  CHECK(hi3 == doctest::Approx(11.65685424949238).epsilon(1e-14));
  CHECK(lo3 <= hi3);
}

TEST_CASE("MpLaw validates parameters") {
  CHECK_THROWS_AS(MpLaw(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(MpLaw(1.5, 1.0), DomainError);
  CHECK_THROWS_AS(MpLaw(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(MpLaw(0.5, -1.0), DomainError);
}

TEST_CASE("mp_pdf pointwise values") {
  const MpLaw square(1.0, 1.0);
  CHECK(mp_pdf(square, 5.0) == 0.0);
  CHECK(mp_pdf(square, -1.0) == 0.0);
  // sqrt((4-2)(2-0)) / (2 pi * 2) = 1 / (2 pi)
  CHECK(mp_pdf(square, 2.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-13));

  const MpLaw half(0.5, 1.0);
  CHECK(mp_pdf(half, half.beta_minus()) == 0.0);
  CHECK(mp_pdf(half, half.beta_plus()) == 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double tau = half.beta_minus() + (half.beta_plus() - half.beta_minus()) * k / 100.0;
    CHECK(mp_pdf(half, tau) >= 0.0);
  }
}

TEST_CASE("mp_cdf matches an independent quadrature and normalizes") {
  const MpLaw law(0.3, 1.0);
  // Frozen from two independent integrators (adaptive quadrature at 1e-13
  // cross-checked against a 1e6-point Riemann sum; they agree to 2e-14).
  CHECK(mp_cdf(law, 1.0) == doctest::Approx(0.558561920333103).epsilon(1e-10));
  CHECK(std::abs(mp_cdf(law, 1.0) - cdf_by_riemann(law, 1.0)) < 1e-9);

  for (double gamma : {0.1, 0.3, 0.5, 1.0}) {
    const MpLaw g(gamma, 1.0);
    CHECK(mp_cdf(g, g.beta_minus()) == 0.0);
    CHECK(std::abs(mp_cdf(g, g.beta_plus()) - 1.0) <= 1e-8);
  }
}

TEST_CASE("mp_cdf is monotone over a 1000-point grid") {
  for (double gamma : {0.25, 0.5, 1.0}) {
    const MpLaw law(gamma, 1.0);
    const double lo = law.beta_minus() - 1.0;
    const double hi = law.beta_plus() + 1.0;
    double prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
      const double tau = lo + (hi - lo) * k / 999.0;
      const double val = mp_cdf(law, tau);
      CHECK(val >= prev);
      prev = val;
    }
  }
}

TEST_CASE("mp_pdf integrates to one (no atom for gamma <= 1)") {
  for (double gamma : {0.2, 0.5, 1.0}) {
    const MpLaw law(gamma, 1.3);
    CHECK(std::abs(cdf_by_riemann(law, law.beta_plus() - 1e-13) - 1.0) < 1e-8);
    CHECK(std::abs(mp_cdf(law, law.beta_plus()) - 1.0) < 1e-8);
  }
}

TEST_CASE("mp_cdf scale equivariance in sigma^2") {
  for (double gamma : {0.3, 0.7, 1.0}) {
    for (double sigma : {0.5, 2.0}) {
      const MpLaw scaled(gamma, sigma);
      const MpLaw unit(gamma, 1.0);
      for (double frac : {0.1, 0.35, 0.62, 0.9}) {
        const double tau =
            scaled.beta_minus() + (scaled.beta_plus() - scaled.beta_minus()) * frac;
        CHECK(std::abs(mp_cdf(scaled, tau) - mp_cdf(unit, tau / (sigma * sigma))) < 1e-10);
      }
    }
  }
}

TEST_CASE("mp_median satisfies the defining equation") {
  for (double gamma : {0.2, 0.5, 1.0}) {
    const MpLaw law(gamma, 1.0);
    const double mu = mp_median(law);
    CHECK(mu > law.beta_minus());
    CHECK(mu < law.beta_plus());
    CHECK(std::abs(mp_cdf(law, mu) - 0.5) < 1e-9);
  }
}

TEST_CASE("mp_median regression and limit values") {
  // Regression constant frozen from an independent bisection oracle.
  CHECK(mp_median(MpLaw(1.0, 1.0)) == doctest::Approx(0.652775941634).epsilon(1e-9));
  // Distribution concentrates at sigma^2 as gamma -> 0.
  CHECK(std::abs(mp_median(MpLaw(1e-4, 1.0)) - 1.0) < 0.05);
  // Scale equivariance in sigma^2.
  CHECK(mp_median(MpLaw(0.5, 2.0)) == doctest::Approx(4.0 * mp_median(MpLaw(0.5, 1.0))).epsilon(1e-9));
  CHECK(mp_median(MpLaw(0.5, 1.0)) == doctest::Approx(0.830465881581).epsilon(1e-9));
}

TEST_CASE("ks_distance at quantile-aligned spectra is tiny") {
  for (double gamma : {0.4, 1.0}) {
    const MpLaw law(gamma, 1.0);
    const Index m = 200;
    const Esd esd = quantile_esd(law, m, static_cast<Index>(m / gamma));
    CHECK(ks_distance(esd, law) <= 1.0 / (2.0 * static_cast<double>(m)) + 1e-8);
  }
}

TEST_CASE("ks_distance of a single eigenvalue at the upper edge is one") {
  const MpLaw law(0.5, 1.0);
  const Esd esd({law.beta_plus()}, 1, 2);
  CHECK(ks_distance(esd, law) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ks_distance rejects an empty spectrum") {
  CHECK_THROWS_AS(ks_distance(Esd{}, MpLaw(0.5, 1.0)), DomainError);
}

TEST_CASE("ks_distance bulk truncation ignores spikes") {
  const MpLaw law(0.5, 1.0);
  const Index m = 100;
  Esd base = quantile_esd(law, m, 2 * m);
  std::vector<double> eigs = base.eigenvalues;
  // Three spikes far above the bulk edge.
  eigs.insert(eigs.begin(), {40.0, 30.0, 20.0});
  const Esd spiked(std::move(eigs), m + 3, 2 * m + 3);
  const double full = ks_distance(spiked, law, KsRange::full_line);
  const double bulk = ks_distance(spiked, law, KsRange::bulk);
  CHECK(full >= 3.0 / 103.0 - 1e-12);        // the spike deficit registers
  CHECK(bulk <= 1.0 / (2.0 * m) + 1e-8);     // the bulk shape alone is clean
}

TEST_CASE("esd validation") {
  CHECK_THROWS_AS(Esd({1.0, 2.0}, 2, 4), DomainError);   // increasing order
  CHECK_THROWS_AS(Esd({2.0, -1.0}, 2, 4), DomainError);  // negative
  CHECK_THROWS_AS(Esd({1.0}, 2, 4), DomainError);        // length mismatch
  CHECK_THROWS_AS(Esd({2.0, 1.0}, 2, 1), DomainError);   // m > n
}

TEST_CASE("ks_pvalue endpoints, frozen value, monotonicity") {
  CHECK(ks_pvalue(0.0, 100) == 1.0);
  CHECK(ks_pvalue(1.0, 10000) <= 1e-300);
  // Frozen from the alternating series evaluated independently.
  CHECK(ks_pvalue(0.05, 500) == doctest::Approx(0.164079197726652).epsilon(1e-9));

  double prev = 1.1;
  for (int k = 0; k <= 60; ++k) {
    const double p = ks_pvalue(k / 60.0, 500);
    CHECK(p <= prev + 1e-15);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
  CHECK_THROWS_AS(ks_pvalue(-0.1, 10), DomainError);
  CHECK_THROWS_AS(ks_pvalue(1.1, 10), DomainError);
  CHECK_THROWS_AS(ks_pvalue(0.5, 0), DomainError);
}

// Spectrum of scaled Poisson noise against the MP law at n = 5000: the mean
// KS distance over 20 seeds sits well under 0.02.
TEST_CASE("biwhitened poisson noise esd approaches the MP law") {
  const Index n = 5000;
  const Index m = n / 2;
  const MpLaw law(0.5, 1.0);
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseMatrix X = gen_signal(SignalSpec::full_rank_uniform(m, n), seed);
    const DenseMatrix Y = sample_counts(X, NoiseFamily::poisson(), seed);
    const ScalingFactors f = scaling_factors_from_variances(Y);
    const DenseMatrix noise = Y - X;
    const DenseMatrix scaled = f.u().asDiagonal() * noise * f.v().asDiagonal();
    total += ks_distance(spectrum(scaled), law);
  }
  CHECK(total / 20.0 < 0.02);
}
