// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "biwhiten/adapt.hpp"
#include "biwhiten/biwhiten.hpp"
#include "biwhiten/io.hpp"
#include "biwhiten/mp_law.hpp"
#include "biwhiten/scaling.hpp"
#include "biwhiten/simgen.hpp"
#include "biwhiten/variance_models.hpp"

using namespace biwhiten;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    const auto [pass, detail] = fn();
    report(id, name, pass, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Scaled-noise spectrum for a full-rank Poisson draw: factors estimated from
// the counts, applied to the centered noise.
Esd scaled_noise_spectrum(Index m, Index n, std::uint64_t seed, double tol) {
  const DenseMatrix X = gen_signal(SignalSpec::full_rank_uniform(m, n), seed);
  const DenseMatrix Y = sample_counts(X, NoiseFamily::poisson(), seed);
  const ScalingFactors f = scaling_factors_from_variances(Y, tol);
  const DenseMatrix noise = f.u().asDiagonal() * (Y - X) * f.v().asDiagonal();
  return spectrum(noise);
}

struct MonteCarlo {
  double mean;
  double half_width;  // 4 standard errors
};

MonteCarlo mc_mean(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  return {mean, 4.0 * std::sqrt(var / n)};
}

}  // namespace

int main() {
  // 1 + 2: convergence of the scaled-noise spectrum to the MP law, and the
  // largest noise eigenvalue to the bulk edge, at gamma = 1/2.
  std::vector<double> ks500, ks2000, lam1_rel;
  const MpLaw law_half(0.5, 1.0);
  run(1, "MP-law convergence of scaled poisson noise", [&] {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ks500.push_back(ks_distance(scaled_noise_spectrum(250, 500, seed, 1e-11), law_half));
      const Esd big = scaled_noise_spectrum(1000, 2000, seed, 1e-11);
      ks2000.push_back(ks_distance(big, law_half));
      lam1_rel.push_back(std::abs(big.eigenvalues[0] - law_half.beta_plus()) /
                         law_half.beta_plus());
    }
    const double m500 = mc_mean(ks500).mean;
    const double m2000 = mc_mean(ks2000).mean;
    const bool pass = m500 > m2000 && m2000 < 0.03;
    return std::pair{pass, "mean KS n=500 " + fmt(m500) + " > n=2000 " + fmt(m2000) + " < 0.03"};
  });

  run(2, "largest noise eigenvalue approaches the bulk edge", [&] {
    const double rel = mc_mean(lam1_rel).mean;
    return std::pair{rel < 0.05, "mean |lam1 - beta+|/beta+ = " + fmt(rel) + " < 0.05 at n=2000"};
  });

  run(3, "rank recovery on the low-rank poisson configuration", [&] {
    const SignalSpec spec = SignalSpec::low_rank(300, 1000, 10, FactorDist::log_normal(2.0),
                                                 FactorDist::uniform(0.0, 1.0), 1.0);
    PipelineOptions opts;
    opts.tol = 1e-12;
    int exact = 0, over = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DenseMatrix Y =
          sample_counts(gen_signal(spec, seed), NoiseFamily::poisson(), seed);
      const Index rank = run_pipeline(Y, QvfParams{0.0, 1.0, 0.0}, std::nullopt, opts).rank;
      if (rank == 10) ++exact;
      if (rank > 10) ++over;
    }
    const bool pass = exact >= 18 && over == 0;
    return std::pair{pass, "rank==10 in " + std::to_string(exact) + "/20, overestimates " +
                               std::to_string(over) + "/20"};
  });

  run(4, "adaptive selection on negative binomial data", [&] {
    SignalSpec spec = SignalSpec::low_rank(1000, 2000, 10, FactorDist::log_normal(2.0),
                                           FactorDist::log_normal(1.0), 1.0);
    const DenseMatrix X = gen_signal(spec, 1);
    const DenseMatrix Y = sample_counts(X, NoiseFamily::negbinomial(3), 1);
    const AdaptReport sel = select_beta(Y, default_beta_grid(), 1e-11);
    bool plateau_has_quarter = false;
    for (const AdaptPoint& pt : sel.per_beta)
      if (!pt.failed && pt.beta == 0.25 && pt.ks <= sel.min_ks + 1e-9) plateau_has_quarter = true;
    const BiwhitenReport report = run_pipeline(Y, sel.selected);
    const bool pass = sel.min_ks >= 0.005 && sel.min_ks <= 0.02 && plateau_has_quarter &&
                      report.rank == 10;
    return std::pair{pass, "min KS " + fmt(sel.min_ks) + " in [0.005,0.02], beta* " +
                               fmt(sel.selected.beta) + ", plateau has 0.25: " +
                               (plateau_has_quarter ? "yes" : "no") + ", rank " +
                               std::to_string(report.rank)};
  });

  run(5, "sinkhorn residual and gauge uniqueness", [&] {
    std::mt19937_64 g(2025);
    std::uniform_int_distribution<Index> md(2, 200), nd(2, 300);
    std::uniform_real_distribution<double> entry(0.05, 10.0), init(0.1, 10.0);
    double worst_res = 0.0, worst_gauge = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Index m = md(g), n = nd(g);
      DenseMatrix A(m, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) A(i, j) = entry(g);
      const Vector r = Vector::Constant(m, static_cast<double>(n));
      const Vector c = Vector::Constant(n, static_cast<double>(m));
      Vector x0(m), y0(n);
      for (Index i = 0; i < m; ++i) x0(i) = init(g);
      for (Index j = 0; j < n; ++j) y0(j) = init(g);
      const ScalingFactors f1 = sinkhorn_scale(A, r, c);
      const ScalingFactors f2 =
          sinkhorn_scale(A, r, c, kDefaultScalingTol, kDefaultScalingMaxIter, x0, y0);
      worst_res = std::max({worst_res, f1.residual, f2.residual});
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
          const double p1 = f1.x(i) * f1.y(j);
          const double p2 = f2.x(i) * f2.y(j);
          worst_gauge = std::max(worst_gauge, std::abs(p1 - p2) / std::abs(p1));
        }
    }
    const bool pass = worst_res <= 1e-11 && worst_gauge <= 1e-8;
    return std::pair{pass, "max residual " + fmt(worst_res) + ", max outer-product deviation " +
                               fmt(worst_gauge)};
  });

  run(6, "monte carlo unbiasedness of the variance estimators", [&] {
    const Index draws = 100000;
    std::string detail;
    bool pass = true;
    auto check = [&](const std::string& label, const DenseMatrix& samples,
                     const std::function<double(double)>& estimator, double target) {
      std::vector<double> est;
      est.reserve(static_cast<std::size_t>(samples.size()));
      for (Index k = 0; k < samples.size(); ++k) est.push_back(estimator(samples(k)));
      const MonteCarlo mc = mc_mean(est);
      const bool ok = std::abs(mc.mean - target) <= mc.half_width;
      pass = pass && ok;
      detail += label + (ok ? " ok " : " FAIL ");
    };

    const QvfParams poisson{0.0, 1.0, 0.0};
    const QvfParams binom5{0.0, 1.0, -0.2};
    const QvfParams nb3{0.0, 1.0, 1.0 / 3.0};
    const QvfParams gp{0.0, 1.0 / 0.81, 0.0};

    check("poisson",
          sample_counts(DenseMatrix::Constant(1, draws, 4.0), NoiseFamily::poisson(), 101),
          [&](double y) { return qvf_unbiased_estimate(poisson, y); }, qvf_variance(poisson, 4.0));
    check("binomial",
          sample_counts(DenseMatrix::Constant(1, draws, 0.3), NoiseFamily::binomial(5), 102),
          [&](double y) { return qvf_unbiased_estimate(binom5, y); }, qvf_variance(binom5, 1.5));
    check("negbinomial",
          sample_counts(DenseMatrix::Constant(1, draws, 2.5), NoiseFamily::negbinomial(3), 103),
          [&](double y) { return qvf_unbiased_estimate(nb3, y); }, qvf_variance(nb3, 2.5));
    // The (alpha, beta) form of the same family must agree.
    check("alphabeta",
          sample_counts(DenseMatrix::Constant(1, draws, 2.5), NoiseFamily::negbinomial(3), 104),
          [&](double y) { return alphabeta_estimate(AlphaBeta(1.0, 0.25), y); },
          qvf_variance(nb3, 2.5));
    check("genpoisson",
          sample_counts(DenseMatrix::Constant(1, draws, 3.0), NoiseFamily::genpoisson(0.1), 105),
          [&](double y) { return qvf_unbiased_estimate(gp, y); }, qvf_variance(gp, 3.0));
    {
      const ZeroInflation zi(0.7);
      const DenseMatrix base =
          sample_counts(DenseMatrix::Constant(1, draws, 4.0), NoiseFamily::poisson(), 106);
      const DenseMatrix observed = zero_inflate(base, 0.7, 107);
      const QvfParams inflated = zero_inflated_qvf(poisson, zi);
      check("zero-inflated", observed,
            [&](double y) { return zero_inflated_estimate(poisson, zi, y); },
            qvf_variance(inflated, 0.7 * 4.0));
    }
    return std::pair{pass, detail};
  });

  run(7, "MP normalization, median, and edge formulas", [&] {
    bool pass = true;
    std::string detail;
    for (double gamma : {0.25, 0.5, 1.0}) {
      const MpLaw law(gamma, 1.0);
      const double norm = mp_cdf(law, law.beta_plus());
      const double mu = mp_median(law);
      const double feq = std::abs(mp_cdf(law, mu) - 0.5);
      const auto [lo, hi] = mp_edges(law);
      // Two algebraic routes to the same edge.
      const double lo2 = 1.0 + gamma - 2.0 * std::sqrt(gamma);
      const double hi2 = 1.0 + gamma + 2.0 * std::sqrt(gamma);
      const bool ok = std::abs(norm - 1.0) <= 1e-8 && feq <= 1e-9 &&
                      std::abs(lo - lo2) <= 1e-15 && std::abs(hi - hi2) <= 4e-15;
      pass = pass && ok;
      detail += "gamma=" + fmt(gamma) + (ok ? " ok " : " FAIL ");
    }
    const auto [lo_q, hi_q] = mp_edges(MpLaw(0.25, 1.0));
    pass = pass && lo_q == 0.25 && hi_q == 2.25;
    const auto [lo_1, hi_1] = mp_edges(MpLaw(1.0, 1.0));
    pass = pass && lo_1 == 0.0 && hi_1 == 4.0;
    return std::pair{pass, detail};
  });

  run(8, "existence diagnostics and block recovery", [&] {
    bool pass = true;
    std::string detail;

    const ScalingDiagnosis eye = diagnose(DenseMatrix::Identity(9, 9));
    const bool eye_flagged =
        !eye.row_violations.empty() && eye.row_violations.front().first == 1;
    pass = pass && eye_flagged;
    detail += std::string("identity k=1: ") + (eye_flagged ? "flagged " : "MISSED ");

    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> entry(0.1, 5.0);
    DenseMatrix P(40, 60);
    for (Index j = 0; j < 60; ++j)
      for (Index i = 0; i < 40; ++i) P(i, j) = entry(g);
    const bool positive_clean = diagnose(P).clean();
    pass = pass && positive_clean;
    detail += std::string("positive: ") + (positive_clean ? "clean " : "FLAGGED ");

    DenseMatrix A = DenseMatrix::Zero(12, 18);
    A.block(0, 0, 5, 8) = P.block(0, 0, 5, 8);
    A.block(5, 8, 7, 10) = P.block(5, 8, 7, 10);
    bool blocks_ok = decompose_blocks(A).size() == 2;
    std::vector<Index> rp(12), cp(18);
    std::iota(rp.begin(), rp.end(), Index{0});
    std::iota(cp.begin(), cp.end(), Index{0});
    std::shuffle(rp.begin(), rp.end(), g);
    std::shuffle(cp.begin(), cp.end(), g);
    DenseMatrix B(12, 18);
    for (Index i = 0; i < 12; ++i)
      for (Index j = 0; j < 18; ++j)
        B(rp[static_cast<std::size_t>(i)], cp[static_cast<std::size_t>(j)]) = A(i, j);
    const auto blocks = decompose_blocks(B);
    blocks_ok = blocks_ok && blocks.size() == 2;
    for (const Block& b : blocks)
      for (std::size_t ii = 0; ii < b.rows.size() && blocks_ok; ++ii)
        for (std::size_t jj = 0; jj < b.cols.size(); ++jj)
          if (b.matrix(static_cast<Index>(ii), static_cast<Index>(jj)) !=
              B(b.rows[ii], b.cols[jj])) {
            blocks_ok = false;
            break;
          }
    pass = pass && blocks_ok;
    detail += std::string("2-block recovery: ") + (blocks_ok ? "ok" : "FAIL");
    return std::pair{pass, detail};
  });

  run(9, "heteroskedasticity detection via split validation", [&] {
    const SignalSpec spec = SignalSpec::low_rank(600, 2000, 5, FactorDist::log_normal(2.0),
                                                 FactorDist::uniform(0.0, 1.0), 5.0);
    const DenseMatrix Y = sample_counts(gen_signal(spec, 1), NoiseFamily::poisson(), 1);
    const SplitValidation constant =
        split_validate(Y, 5, SplitAxis::columns, 1, SplitSelection::constant());
    const SplitValidation poisson = split_validate(
        Y, 5, SplitAxis::columns, 1, SplitSelection::fixed_model(QvfParams{0.0, 1.0, 0.0}));
    const bool pass = constant.mean_pvalue < 1e-6 && poisson.mean_ks < 0.03;
    return std::pair{pass, "constant-variance p " + fmt(constant.mean_pvalue) +
                               " < 1e-6, poisson mean KS " + fmt(poisson.mean_ks) + " < 0.03"};
  });

  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
