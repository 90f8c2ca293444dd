#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "biwhiten/mp_law.hpp"
#include "biwhiten/scaling.hpp"
#include "biwhiten/types.hpp"
#include "biwhiten/variance_models.hpp"

namespace biwhiten {

// Entrywise noise-variance model: explicit QVF coefficients or a point on the
// (alpha, beta) surface.
using VarianceModel = std::variant<QvfParams, AlphaBeta>;

struct VarianceMatrixResult {
  DenseMatrix V;
  Index clamped = 0;  // negative estimates clamped to zero
};

// Entrywise variance-estimate matrix for the observations. Negative estimates
// (possible for c < 0) are clamped to zero and counted; clamped entries act
// as structural zeros downstream.
VarianceMatrixResult variance_matrix(const DenseMatrix& Y, const VarianceModel& model,
                                     const std::optional<ZeroInflation>& zi = std::nullopt);

struct BiwhitenResult {
  DenseMatrix y_hat;
  ScalingFactors factors;
  Index clamped = 0;
};

// Single-shot biwhitening: solve the variance scaling problem and return
// Yhat_ij = u_i Y_ij v_j with u = sqrt(x), v = sqrt(y). The input must be
// scalable as-is (no pruning is attempted here); structural and convergence
// failures propagate.
BiwhitenResult biwhiten(const DenseMatrix& Y, const VarianceModel& model,
                        double tol = kDefaultScalingTol,
                        const std::optional<ZeroInflation>& zi = std::nullopt,
                        std::int64_t max_iter = kDefaultScalingMaxIter);

// Eigenvalues of n^-1 Yhat Yhat^T as squared singular values of n^-1/2 Yhat,
// transposing first when rows > cols so that m <= n always holds.
Esd spectrum(const DenseMatrix& y_hat);

// #{k : lambda_k > (1 + sqrt(m/n))^2 + epsilon}. With epsilon = 0 this counts
// exactly the singular values of Yhat above sqrt(n) + sqrt(m).
Index estimate_rank(const Esd& esd, double epsilon = 0.0);

struct PipelineOptions {
  double tol = kDefaultScalingTol;
  std::int64_t max_iter = kDefaultScalingMaxIter;
  double epsilon = 0.0;
  // Prune rows/columns until the zero-count existence requirements hold
  // (default). When false, only zero rows/columns are stripped and scaling is
  // attempted as-is; the requirements are sufficient, not necessary, so this
  // can still succeed.
  bool prune = true;
};

// Rank analysis of one block of the (possibly decomposed) matrix. Index lists
// refer to the original input orientation.
struct BlockReport {
  std::vector<Index> rows;
  std::vector<Index> cols;
  ScalingFactors factors;  // x over rows, y over cols
  Esd esd;
  std::vector<double> singular_values;
  double threshold;  // eigenvalue scale: (1 + sqrt(gamma_block))^2 + epsilon
  Index rank;
};

// Full pipeline output. With the default pruning policy the kept matrix is a
// single block and the top-level spectrum/threshold/rank are exactly that
// block's. With pruning disabled the matrix may split into blocks; the
// spectrum is then the concatenation of per-block spectra (each normalized by
// its own column count) and rank is the sum of per-block ranks.
struct BiwhitenReport {
  Index input_rows = 0;
  Index input_cols = 0;
  bool transposed = false;  // a transpose was applied to enforce m <= n
  ScalingDiagnosis diagnosis;
  std::vector<Index> pruned_rows;  // original input coordinates
  std::vector<Index> pruned_cols;
  std::vector<Index> kept_rows;  // ascending; factors align with these
  std::vector<Index> kept_cols;
  Index clamped_variances = 0;
  ScalingFactors factors;  // assembled over kept rows/cols, original coordinates
  Esd esd;
  std::vector<double> singular_values;
  double threshold = 0.0;
  double epsilon = 0.0;
  Index rank = 0;
  std::vector<BlockReport> blocks;
};

// Algorithm pipeline: orient (m <= n), estimate entrywise variances, diagnose
// and repair the zero pattern, scale per block, and count spectrum entries
// above the bulk edge.
BiwhitenReport run_pipeline(const DenseMatrix& Y, const VarianceModel& model,
                            const std::optional<ZeroInflation>& zi = std::nullopt,
                            const PipelineOptions& opts = {});

}  // namespace biwhiten
