#pragma once

#include <utility>
#include <vector>

#include "biwhiten/types.hpp"

namespace biwhiten {

// Marchenko-Pastur law with aspect ratio gamma in (0,1] and noise standard
// deviation sigma > 0. Support is [beta_minus, beta_plus] with
// beta_pm = sigma^2 (1 -+ sqrt(gamma))^2.
struct MpLaw {
  double gamma;
  double sigma;

  MpLaw(double gamma, double sigma);

  double beta_minus() const;
  double beta_plus() const;
};

// Empirical spectral distribution: the descending-sorted eigenvalues of
// n^-1 Yhat Yhat^T for an m x n matrix with m <= n. The step CDF is
// right-continuous: F(x) = #{lambda <= x} / m.
struct Esd {
  std::vector<double> eigenvalues;  // nonincreasing, nonnegative
  Index m = 0;
  Index n = 0;

  Esd() = default;  // empty placeholder; real spectra come from the validating constructor
  Esd(std::vector<double> eigenvalues_desc, Index m, Index n);

  double aspect_ratio() const { return static_cast<double>(m) / static_cast<double>(n); }
  Index size() const { return static_cast<Index>(eigenvalues.size()); }
};

// Domain over which the KS sup is taken. The bulk variant restricts the sup
// to [beta_minus, beta_plus], ignoring deviations carried by eigenvalues
// outside the support (e.g. signal spikes).
enum class KsRange { full_line, bulk };

std::pair<double, double> mp_edges(const MpLaw& law);

// Density of the MP law at tau; zero outside the support.
double mp_pdf(const MpLaw& law, double tau);

// CDF of the MP law, by adaptive Gauss-Kronrod quadrature of the density
// under the substitution tau = beta_minus + (beta_plus - beta_minus) sin^2
// theta, which removes the square-root edge singularities. Absolute error
// <= 1e-12 on the substituted integrand.
double mp_cdf(const MpLaw& law, double tau);

// Median of the MP law, by bisection on mp_cdf to bracket width 1e-10.
double mp_median(const MpLaw& law);

// sup_x |F_esd(x) - F_law(x)|, evaluated on both sides of every eigenvalue
// jump (and at the support edges for the bulk variant).
double ks_distance(const Esd& esd, const MpLaw& law, KsRange range = KsRange::full_line);

// Asymptotic Kolmogorov tail probability Q(sqrt(m) * d), with the series
// truncated once terms fall below 1e-12. Used as a surrogate p-value with the
// number of eigenvalues as the effective sample size; the null (eigenvalues
// sampled i.i.d. from the MP law) is approximate by construction.
double ks_pvalue(double d, Index m);

}  // namespace biwhiten
