#include "biwhiten/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace biwhiten {

namespace {

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

DenseMatrix take(const DenseMatrix& A, const std::vector<Index>& rows,
                 const std::vector<Index>& cols) {
  DenseMatrix S(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t jj = 0; jj < cols.size(); ++jj)
    for (std::size_t ii = 0; ii < rows.size(); ++ii)
      S(static_cast<Index>(ii), static_cast<Index>(jj)) = A(rows[ii], cols[jj]);
  return S;
}

Esd scale_esd(const Esd& esd, double factor) {
  std::vector<double> eigs = esd.eigenvalues;
  for (double& e : eigs) e *= factor;
  return Esd(std::move(eigs), esd.m, esd.n);
}

// Scale + spectrum + median-matched alpha + KS for one beta grid point.
AdaptPoint evaluate_beta(const DenseMatrix& Y, double beta, double tol, double mu_gamma) {
  AdaptPoint pt;
  pt.beta = beta;
  try {
    DenseMatrix V = ((1.0 - beta) * Y.array() + beta * Y.array().square()).matrix();
    const ScalingFactors f = scaling_factors_from_variances(V, tol);
    const DenseMatrix y_hat = f.u().asDiagonal() * Y * f.v().asDiagonal();
    const Esd esd = spectrum(y_hat);
    const double median = esd.eigenvalues[static_cast<std::size_t>(
        esd.size() - 1 - (esd.size() - 1) / 2)];
    if (!(median > 0.0)) throw DomainError("select_beta: median eigenvalue is zero");
    pt.alpha = median / mu_gamma;
    pt.ks = ks_distance(scale_esd(esd, 1.0 / pt.alpha), MpLaw(esd.aspect_ratio(), 1.0));
  } catch (const Error& e) {
    pt.failed = true;
    pt.error = e.what();
  }
  return pt;
}

// Prunes a matrix whose variance pattern matches its own zero pattern, then
// applies the model on the kept submatrix. Models without structural zeros
// (constant variance, a > 0 QVFs) skip the pruning.
DenseMatrix solve_half(const DenseMatrix& half, const VarianceModel& model, double tol,
                       Esd* esd_out) {
  VarianceMatrixResult vm = variance_matrix(half, model);
  DenseMatrix Y = half;
  if ((vm.V.array() == 0.0).any()) {
    PruneResult pr = prune_to_scalable(vm.V);
    Y = take(half, pr.kept_rows, pr.kept_cols);
    vm.V = std::move(pr.matrix);
  }
  const ScalingFactors f = scaling_factors_from_variances(vm.V, tol);
  const DenseMatrix y_hat = f.u().asDiagonal() * Y * f.v().asDiagonal();
  *esd_out = spectrum(y_hat);
  return y_hat;
}

}  // namespace

std::vector<double> default_beta_grid() {
  std::vector<double> grid(21);
  for (int i = 0; i <= 20; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / 20.0;
  return grid;
}

double select_alpha(const Esd& esd) {
  if (esd.size() == 0) throw DomainError("select_alpha: empty spectrum");
  const double median =
      esd.eigenvalues[static_cast<std::size_t>(esd.size() - 1 - (esd.size() - 1) / 2)];
  if (!(median > 0.0))
    throw DomainError("select_alpha: median eigenvalue must be positive");
  return median / mp_median(MpLaw(esd.aspect_ratio(), 1.0));
}

AdaptReport select_beta(const DenseMatrix& Y, const std::vector<double>& grid, double tol) {
  if (grid.empty()) throw DomainError("select_beta: empty grid");
  for (double b : grid)
    if (!(b >= 0.0) || !(b <= 1.0)) throw DomainError("select_beta: beta must lie in [0, 1]");

  const double gamma = static_cast<double>(std::min(Y.rows(), Y.cols())) /
                       static_cast<double>(std::max(Y.rows(), Y.cols()));
  const double mu_gamma = mp_median(MpLaw(gamma, 1.0));

  std::vector<AdaptPoint> points;
  points.reserve(grid.size());
  for (double beta : grid) points.push_back(evaluate_beta(Y, beta, tol, mu_gamma));

  const AdaptPoint* best = nullptr;
  for (const AdaptPoint& pt : points) {
    if (pt.failed) continue;
    if (!best || pt.ks < best->ks || (pt.ks == best->ks && pt.beta < best->beta)) best = &pt;
  }
  if (!best) throw Error("select_beta: scaling failed at every grid point");
  return AdaptReport{grid, std::move(points), AlphaBeta(best->alpha, best->beta), best->ks};
}

SplitSelection SplitSelection::adaptive(std::vector<double> grid) {
  SplitSelection s;
  s.kind = Kind::adapt_alpha_beta;
  s.grid = std::move(grid);
  return s;
}

SplitSelection SplitSelection::constant() {
  SplitSelection s;
  s.kind = Kind::constant_variance;
  return s;
}

SplitSelection SplitSelection::fixed_model(VarianceModel model) {
  SplitSelection s;
  s.kind = Kind::fixed;
  s.fixed = std::move(model);
  return s;
}

SplitValidation split_validate(const DenseMatrix& Y, Index trials, SplitAxis axis,
                               std::uint64_t seed, const SplitSelection& selection, double tol) {
  if (trials < 1) throw DomainError("split_validate: need at least one trial");
  if (selection.kind == SplitSelection::Kind::fixed && !selection.fixed)
    throw DomainError("split_validate: fixed selection requires a model");

  const Index extent = axis == SplitAxis::columns ? Y.cols() : Y.rows();
  if (extent < 4) throw DomainError("split_validate: too few observations to split");

  SplitValidation out;
  out.trials = trials;
  double ks_sum = 0.0, p_sum = 0.0;
  for (Index t = 0; t < trials; ++t) {
    SplitMix64 g{seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1))};
    std::vector<Index> order(static_cast<std::size_t>(extent));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), g);
    const std::size_t half = static_cast<std::size_t>(extent) / 2;
    std::vector<Index> sel_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<Index> val_idx(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(sel_idx.begin(), sel_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    std::vector<Index> all_rows(static_cast<std::size_t>(Y.rows()));
    std::iota(all_rows.begin(), all_rows.end(), Index{0});
    std::vector<Index> all_cols(static_cast<std::size_t>(Y.cols()));
    std::iota(all_cols.begin(), all_cols.end(), Index{0});
    const DenseMatrix A = axis == SplitAxis::columns ? take(Y, all_rows, sel_idx)
                                                     : take(Y, sel_idx, all_cols);
    const DenseMatrix B = axis == SplitAxis::columns ? take(Y, all_rows, val_idx)
                                                     : take(Y, val_idx, all_cols);

    SplitValidation::Trial trial;
    try {
      switch (selection.kind) {
        case SplitSelection::Kind::adapt_alpha_beta: {
          DenseMatrix Ap = A;
          if ((A.array() == 0.0).any()) Ap = prune_to_scalable(A).matrix;
          trial.model = select_beta(Ap, selection.grid, tol).selected;
          break;
        }
        case SplitSelection::Kind::constant_variance: {
          const double alpha = select_alpha(spectrum(A));
          trial.model = QvfParams{alpha, 0.0, 0.0};
          break;
        }
        case SplitSelection::Kind::fixed:
          trial.model = *selection.fixed;
          break;
      }
      Esd esd;
      solve_half(B, trial.model, tol, &esd);
      trial.ks = ks_distance(esd, MpLaw(esd.aspect_ratio(), 1.0));
      trial.pvalue = ks_pvalue(trial.ks, esd.size());
      ks_sum += trial.ks;
      p_sum += trial.pvalue;
    } catch (const Error& e) {
      trial.failed = true;
      trial.error = e.what();
      ++out.failed;
    }
    out.per_trial.push_back(std::move(trial));
  }
  const Index ok = trials - out.failed;
  if (ok == 0) throw Error("split_validate: every trial failed");
  out.mean_ks = ks_sum / static_cast<double>(ok);
  out.mean_pvalue = p_sum / static_cast<double>(ok);
  return out;
}

}  // namespace biwhiten
