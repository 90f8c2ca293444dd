#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "biwhiten/types.hpp"

namespace biwhiten {

inline constexpr double kDefaultScalingTol = 1e-11;
inline constexpr std::int64_t kDefaultScalingMaxIter = 1'000'000;

// Positive diagonal factors solving D(x) A D(y) = prescribed row/column sums.
// For variance scaling, x_i and y_j are the squares of the factors applied to
// the data matrix (u_i = sqrt(x_i), v_j = sqrt(y_j)). The pair is normalized
// so that |x|_1 / m == |y|_1 / n, which pins down the free scalar in
// (a x, a^-1 y).
struct ScalingFactors {
  Vector x;
  Vector y;
  std::int64_t iterations = 0;
  double residual = 0.0;

  Vector u() const { return x.cwiseSqrt(); }
  Vector v() const { return y.cwiseSqrt(); }
};

// Structural report on the zero pattern of a nonnegative matrix: zero
// rows/columns, connected components of the bipartite nonzero graph, and the
// zero-count requirements that guarantee existence and uniqueness of scaling
// factors for row sums n and column sums m.
struct ScalingDiagnosis {
  std::vector<Index> zero_rows;
  std::vector<Index> zero_cols;
  // Connected components over the non-zero rows/columns; one entry per block,
  // each holding ascending original row and column indices.
  std::vector<std::pair<std::vector<Index>, std::vector<Index>>> blocks;
  // (k, count): at least ceil(m k / n) rows have >= n - k zeros each.
  std::vector<std::pair<Index, Index>> row_violations;
  // (l, count): at least ceil(n l / m) columns have >= m - l zeros each.
  std::vector<std::pair<Index, Index>> col_violations;

  bool has_zero_lines() const { return !zero_rows.empty() || !zero_cols.empty(); }
  bool has_violations() const { return !row_violations.empty() || !col_violations.empty(); }
  bool clean() const { return !has_zero_lines() && !has_violations(); }
};

// One block of a completely decomposable matrix, with the original indices it
// was cut from.
struct Block {
  DenseMatrix matrix;
  std::vector<Index> rows;
  std::vector<Index> cols;
};

// Result of pruning a matrix down to a submatrix satisfying the existence
// requirements. Removed indices are in removal order; kept indices ascending.
struct PruneResult {
  DenseMatrix matrix;
  std::vector<Index> removed_rows;
  std::vector<Index> removed_cols;
  std::vector<Index> kept_rows;
  std::vector<Index> kept_cols;
};

// Alternating column-then-row balancing of a nonnegative matrix to prescribed
// row and column sums, iterated until the max deviation of both row and
// column sums drops to tol. Throws StructuralError for zero rows/columns,
// DomainError when the target sums are inconsistent, and ConvergenceError
// (carrying the best residual) when max_iter is exhausted. Optional initial
// iterates allow probing the gauge freedom; defaults are all-ones.
ScalingFactors sinkhorn_scale(const DenseMatrix& A, const Vector& row_targets,
                              const Vector& col_targets, double tol = kDefaultScalingTol,
                              std::int64_t max_iter = kDefaultScalingMaxIter,
                              const std::optional<Vector>& x0 = std::nullopt,
                              const std::optional<Vector>& y0 = std::nullopt);

ScalingDiagnosis diagnose(const DenseMatrix& A);

// Splits a matrix with no zero rows/columns into the blocks of its bipartite
// nonzero graph. A connected matrix comes back as a single block.
std::vector<Block> decompose_blocks(const DenseMatrix& A);

// Repeatedly drops zero rows/columns and, while a zero-count requirement is
// violated, the row (then column) with the most zeros; ties break toward the
// lowest index. Throws StructuralError if the matrix shrinks below 2x2.
PruneResult prune_to_scalable(const DenseMatrix& A);

// Solves the variance scaling problem: row sums n, column sums m on the
// entrywise variance matrix. The returned x, y are the squared data-matrix
// factors.
ScalingFactors scaling_factors_from_variances(const DenseMatrix& V,
                                              double tol = kDefaultScalingTol,
                                              std::int64_t max_iter = kDefaultScalingMaxIter);

}  // namespace biwhiten
