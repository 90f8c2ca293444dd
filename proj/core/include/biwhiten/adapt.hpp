#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "biwhiten/biwhiten.hpp"
#include "biwhiten/mp_law.hpp"
#include "biwhiten/types.hpp"
#include "biwhiten/variance_models.hpp"

namespace biwhiten {

// beta in {0, 0.05, ..., 0.95, 1}.
std::vector<double> default_beta_grid();

// Global scale by median matching: the ratio of the median eigenvalue (lower
// median for even counts) to the median of the MP law at the spectrum's
// aspect ratio. Throws DomainError when the median eigenvalue is not
// positive.
double select_alpha(const Esd& esd);

struct AdaptPoint {
  double beta = 0.0;
  double alpha = 0.0;
  double ks = 0.0;
  bool failed = false;
  std::string error;
};

struct AdaptReport {
  std::vector<double> beta_grid;
  std::vector<AdaptPoint> per_beta;
  AlphaBeta selected;
  double min_ks;
};

// Grid search over beta: for each grid point, solve the scaling problem on
// the alpha = 1 variance matrix, choose alpha by median matching, and measure
// the KS distance between the alpha-corrected spectrum and the MP law.
// Returns the minimizer; ties break toward the smaller beta. Grid points
// whose scaling fails are marked and skipped; if every point fails an Error
// is thrown.
AdaptReport select_beta(const DenseMatrix& Y, const std::vector<double>& grid,
                        double tol = kDefaultScalingTol);

enum class SplitAxis { rows, columns };

// What gets selected on the fitting half of a split.
struct SplitSelection {
  enum class Kind {
    adapt_alpha_beta,   // grid search for beta, alpha by median matching
    constant_variance,  // homoskedastic model, alpha by median matching
    fixed,              // use `fixed` verbatim, nothing is selected
  };
  Kind kind = Kind::adapt_alpha_beta;
  std::vector<double> grid = default_beta_grid();
  std::optional<VarianceModel> fixed;

  static SplitSelection adaptive(std::vector<double> grid = default_beta_grid());
  static SplitSelection constant();
  static SplitSelection fixed_model(VarianceModel model);
};

struct SplitValidation {
  struct Trial {
    double ks = 0.0;
    double pvalue = 0.0;
    VarianceModel model;  // the model applied to the held-out half
    bool failed = false;
    std::string error;
  };
  Index trials = 0;
  Index failed = 0;
  double mean_ks = 0.0;
  double mean_pvalue = 0.0;
  std::vector<Trial> per_trial;
};

// Repeated sample splitting: per trial, split the observations in half along
// `axis` with a per-trial stream derived from `seed`, select model parameters
// on one half, solve the scaling problem on the disjoint half with those
// parameters fixed, and record the KS distance and surrogate p-value of the
// resulting spectrum against the MP law. Trials whose scaling fails are
// counted and excluded from the means.
SplitValidation split_validate(const DenseMatrix& Y, Index trials, SplitAxis axis,
                               std::uint64_t seed, const SplitSelection& selection = {},
                               double tol = kDefaultScalingTol);

}  // namespace biwhiten
