#include "biwhiten/mp_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace biwhiten {

namespace {

constexpr double kCdfTol = 1e-12;

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
std::pair<double, double> gauss_kronrod(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double fc = f(mid);
  double gauss = fc * kGaussWeights[3];
  double kronrod = fc * kKronrodWeights[7];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double fsum = f(mid - dx) + f(mid + dx);
    kronrod += fsum * kKronrodWeights[i];
    if (i % 2 == 1) gauss += fsum * kGaussWeights[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {kronrod, std::abs(kronrod - gauss)};
}

// Adaptive bisection until each panel's Kronrod-vs-Gauss error estimate fits
// within its share of the absolute tolerance.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol) {
  struct Panel {
    double a, b, value, error;
  };
  auto [v0, e0] = gauss_kronrod(f, a, b);
  std::vector<Panel> stack{{a, b, v0, e0}};
  double total = 0.0;
  int splits = 0;
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    const double share = abs_tol * (p.b - p.a) / (b - a);
    if (p.error <= share || splits > 2000) {
      total += p.value;
      continue;
    }
    ++splits;
    const double mid = 0.5 * (p.a + p.b);
    auto [vl, el] = gauss_kronrod(f, p.a, mid);
    auto [vr, er] = gauss_kronrod(f, mid, p.b);
    stack.push_back({p.a, mid, vl, el});
    stack.push_back({mid, p.b, vr, er});
  }
  return total;
}

}  // namespace

MpLaw::MpLaw(double gamma, double sigma) : gamma(gamma), sigma(sigma) {
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw DomainError("MpLaw: aspect ratio must lie in (0, 1], got " + std::to_string(gamma));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("MpLaw: sigma must be positive and finite");
}

double MpLaw::beta_minus() const {
  const double s = 1.0 - std::sqrt(gamma);
  return sigma * sigma * s * s;
}

double MpLaw::beta_plus() const {
  const double s = 1.0 + std::sqrt(gamma);
  return sigma * sigma * s * s;
}

Esd::Esd(std::vector<double> eigenvalues_desc, Index m, Index n)
    : eigenvalues(std::move(eigenvalues_desc)), m(m), n(n) {
  if (m <= 0 || n <= 0 || m > n)
    throw DomainError("Esd: requires 0 < m <= n (transpose the matrix first)");
  if (static_cast<Index>(eigenvalues.size()) != m)
    throw DomainError("Esd: expected one eigenvalue per row, got " +
                      std::to_string(eigenvalues.size()) + " for m=" + std::to_string(m));
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] >= 0.0) || !std::isfinite(eigenvalues[i]))
      throw DomainError("Esd: eigenvalues must be nonnegative and finite");
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
      throw DomainError("Esd: eigenvalues must be sorted in nonincreasing order");
  }
}

std::pair<double, double> mp_edges(const MpLaw& law) {
  return {law.beta_minus(), law.beta_plus()};
}

double mp_pdf(const MpLaw& law, double tau) {
  const double bm = law.beta_minus();
  const double bp = law.beta_plus();
  if (!(tau > bm) || !(tau < bp)) return 0.0;
  const double s2 = law.sigma * law.sigma;
  return std::sqrt((bp - tau) * (tau - bm)) / (2.0 * std::numbers::pi * s2 * law.gamma * tau);
}

double mp_cdf(const MpLaw& law, double tau) {
  const double bm = law.beta_minus();
  const double bp = law.beta_plus();
  if (tau <= bm) return 0.0;
  if (tau >= bp) return 1.0;
  // tau(theta) = bm + (bp - bm) sin^2 theta turns the density into an
  // analytic integrand over [0, theta_max]:
  //   (bp - bm)^2 sin^2(2 theta) / (4 pi sigma^2 gamma tau(theta)).
  // At gamma = 1 the tau in the denominator cancels the sin^2 theta, so the
  // integrand stays bounded even though the density blows up at tau -> 0.
  const double width = bp - bm;
  const double u = std::clamp((tau - bm) / width, 0.0, 1.0);
  const double theta_max = std::asin(std::sqrt(u));
  const double s2 = law.sigma * law.sigma;
  const double scale = width * width / (4.0 * std::numbers::pi * s2 * law.gamma);
  auto integrand = [&](double theta) {
    const double st = std::sin(theta);
    const double s2t = std::sin(2.0 * theta);
    const double t = bm + width * st * st;
    return scale * s2t * s2t / t;
  };
  const double val = integrate_adaptive(integrand, 0.0, theta_max, kCdfTol);
  return std::clamp(val, 0.0, 1.0);
}

double mp_median(const MpLaw& law) {
  double lo = law.beta_minus();
  double hi = law.beta_plus();
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mp_cdf(law, mid) < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_distance(const Esd& esd, const MpLaw& law, KsRange range) {
  if (esd.eigenvalues.empty())
    throw DomainError("ks_distance: empty spectrum");
  // The bulk variant truncates the spectrum to the MP support and
  // renormalizes, measuring the shape of the bulk alone; eigenvalue deficits
  // caused by spikes no longer register.
  std::vector<double> ascending(esd.eigenvalues.rbegin(), esd.eigenvalues.rend());
  if (range == KsRange::bulk) {
    const double bm = law.beta_minus();
    const double bp = law.beta_plus();
    std::erase_if(ascending, [&](double v) { return v < bm || v > bp; });
    if (ascending.empty())
      throw DomainError("ks_distance: no eigenvalues inside the MP support");
  }
  const double md = static_cast<double>(ascending.size());
  double d = 0.0;
  // Eigenvalue with ascending rank i (1-based) carries the jump from
  // (i-1)/m to i/m; the sup is checked on both sides.
  for (std::size_t i = 1; i <= ascending.size(); ++i) {
    const double cdf = mp_cdf(law, ascending[i - 1]);
    d = std::max(d, std::abs(cdf - static_cast<double>(i - 1) / md));
    d = std::max(d, std::abs(static_cast<double>(i) / md - cdf));
  }
  return std::min(d, 1.0);
}

double ks_pvalue(double d, Index m) {
  if (!(d >= 0.0) || !(d <= 1.0))
    throw DomainError("ks_pvalue: statistic must lie in [0, 1]");
  if (m < 1) throw DomainError("ks_pvalue: need at least one eigenvalue");
  const double t = std::sqrt(static_cast<double>(m)) * d;
  if (t <= 0.0) return 1.0;
  if (t < 0.2) {
    // Complement via the dual theta series, which converges immediately for
    // small arguments where the alternating series would need O(1/t) terms.
    double cdf = 0.0;
    const double pi = std::numbers::pi;
    for (int k = 1; k <= 16; ++k) {
      const double a = (2.0 * k - 1.0) * pi / t;
      const double term = std::exp(-a * a / 8.0);
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * pi) / t;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = 2.0 * std::exp(-2.0 * static_cast<double>(k) * k * t * t);
    q += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace biwhiten
