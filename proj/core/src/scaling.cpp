#include "biwhiten/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace biwhiten {

namespace {

struct UnionFind {
  std::vector<Index> parent;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }

  Index find(Index a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }

  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // keep the smaller index as root
    parent[static_cast<std::size_t>(b)] = a;
  }
};

std::vector<Index> row_nonzero_counts(const DenseMatrix& A) {
  std::vector<Index> nnz(static_cast<std::size_t>(A.rows()), 0);
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) ++nnz[static_cast<std::size_t>(i)];
  return nnz;
}

std::vector<Index> col_nonzero_counts(const DenseMatrix& A) {
  std::vector<Index> nnz(static_cast<std::size_t>(A.cols()), 0);
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) ++nnz[static_cast<std::size_t>(j)];
  return nnz;
}

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

// (k, count) pairs where at least ceil(major * k / minor) lines have nonzero
// count <= k, for k = 1 .. floor(minor / 2).
std::vector<std::pair<Index, Index>> requirement_violations(const std::vector<Index>& nnz,
                                                            Index major, Index minor) {
  // cum[k] = number of lines with nnz <= k
  std::vector<Index> sorted(nnz);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<Index, Index>> out;
  for (Index k = 1; k <= minor / 2; ++k) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), k);
    const Index count = static_cast<Index>(std::distance(sorted.begin(), it));
    if (count >= ceil_div(major * k, minor)) out.emplace_back(k, count);
  }
  return out;
}

void validate_nonnegative(const DenseMatrix& A, const char* who) {
  if (A.rows() == 0 || A.cols() == 0) throw DomainError(std::string(who) + ": empty matrix");
  if ((A.array() < 0.0).any() || !A.allFinite())
    throw DomainError(std::string(who) + ": matrix must be nonnegative and finite");
}

void gauge_normalize(Vector& x, Vector& y, Index m, Index n) {
  const double a = std::sqrt((static_cast<double>(m) * y.sum()) / (static_cast<double>(n) * x.sum()));
  x *= a;
  y /= a;
}

}  // namespace

ScalingFactors sinkhorn_scale(const DenseMatrix& A, const Vector& row_targets,
                              const Vector& col_targets, double tol, std::int64_t max_iter,
                              const std::optional<Vector>& x0, const std::optional<Vector>& y0) {
  validate_nonnegative(A, "sinkhorn_scale");
  const Index m = A.rows();
  const Index n = A.cols();
  if (row_targets.size() != m || col_targets.size() != n)
    throw DomainError("sinkhorn_scale: target length mismatch");
  if ((row_targets.array() <= 0.0).any() || (col_targets.array() <= 0.0).any())
    throw DomainError("sinkhorn_scale: targets must be positive");
  const double rsum = row_targets.sum();
  const double csum = col_targets.sum();
  if (std::abs(rsum - csum) > 1e-9 * std::max(std::abs(rsum), std::abs(csum)))
    throw DomainError("sinkhorn_scale: sum of row targets (" + std::to_string(rsum) +
                      ") must equal sum of column targets (" + std::to_string(csum) + ")");
  for (Index i = 0; i < m; ++i)
    if ((A.row(i).array() == 0.0).all())
      throw StructuralError("sinkhorn_scale: zero row at index " + std::to_string(i) +
                            "; scaling factors cannot exist");
  for (Index j = 0; j < n; ++j)
    if ((A.col(j).array() == 0.0).all())
      throw StructuralError("sinkhorn_scale: zero column at index " + std::to_string(j) +
                            "; scaling factors cannot exist");

  Vector x = x0.value_or(Vector::Ones(m));
  Vector y = y0.value_or(Vector::Ones(n));
  if (x.size() != m || y.size() != n || (x.array() <= 0.0).any() || (y.array() <= 0.0).any())
    throw DomainError("sinkhorn_scale: initial iterates must be positive with matching lengths");

  Vector Ay = A * y;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t iter = 0; iter <= max_iter; ++iter) {
    const Vector Atx = A.transpose() * x;
    const double row_res = (x.cwiseProduct(Ay) - row_targets).cwiseAbs().maxCoeff();
    const double col_res = (y.cwiseProduct(Atx) - col_targets).cwiseAbs().maxCoeff();
    const double res = std::max(row_res, col_res);
    best = std::min(best, res);
    if (res <= tol) {
      gauge_normalize(x, y, m, n);
      return {std::move(x), std::move(y), iter, res};
    }
    if (iter == max_iter) break;
    y = col_targets.cwiseQuotient(Atx);
    Ay = A * y;
    x = row_targets.cwiseQuotient(Ay);
  }
  throw ConvergenceError("sinkhorn_scale: residual " + std::to_string(best) +
                             " above tolerance " + std::to_string(tol) + " after " +
                             std::to_string(max_iter) + " iterations",
                         best, max_iter);
}

ScalingDiagnosis diagnose(const DenseMatrix& A) {
  validate_nonnegative(A, "diagnose");
  const Index m = A.rows();
  const Index n = A.cols();
  ScalingDiagnosis diag;

  const std::vector<Index> row_nnz = row_nonzero_counts(A);
  const std::vector<Index> col_nnz = col_nonzero_counts(A);
  for (Index i = 0; i < m; ++i)
    if (row_nnz[static_cast<std::size_t>(i)] == 0) diag.zero_rows.push_back(i);
  for (Index j = 0; j < n; ++j)
    if (col_nnz[static_cast<std::size_t>(j)] == 0) diag.zero_cols.push_back(j);

  // Bipartite components over nodes [0, m) = rows, [m, m + n) = columns.
  UnionFind uf(m + n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i)
      if (A(i, j) != 0.0) uf.unite(i, m + j);
  std::vector<Index> root_to_block(static_cast<std::size_t>(m + n), -1);
  for (Index i = 0; i < m; ++i) {
    if (row_nnz[static_cast<std::size_t>(i)] == 0) continue;
    const Index r = uf.find(i);
    auto& slot = root_to_block[static_cast<std::size_t>(r)];
    if (slot < 0) {
      slot = static_cast<Index>(diag.blocks.size());
      diag.blocks.emplace_back();
    }
    diag.blocks[static_cast<std::size_t>(slot)].first.push_back(i);
  }
  for (Index j = 0; j < n; ++j) {
    if (col_nnz[static_cast<std::size_t>(j)] == 0) continue;
    const Index r = uf.find(m + j);
    auto& slot = root_to_block[static_cast<std::size_t>(r)];
    if (slot < 0) {
      slot = static_cast<Index>(diag.blocks.size());
      diag.blocks.emplace_back();
    }
    diag.blocks[static_cast<std::size_t>(slot)].second.push_back(j);
  }

  diag.row_violations = requirement_violations(row_nnz, m, n);
  diag.col_violations = requirement_violations(col_nnz, n, m);
  return diag;
}

std::vector<Block> decompose_blocks(const DenseMatrix& A) {
  const ScalingDiagnosis diag = diagnose(A);
  if (diag.has_zero_lines())
    throw StructuralError("decompose_blocks: matrix has " +
                          std::to_string(diag.zero_rows.size()) + " zero rows and " +
                          std::to_string(diag.zero_cols.size()) +
                          " zero columns; remove them first");
  std::vector<Block> blocks;
  blocks.reserve(diag.blocks.size());
  for (const auto& [rows, cols] : diag.blocks) {
    Block b;
    b.rows = rows;
    b.cols = cols;
    b.matrix.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t jj = 0; jj < cols.size(); ++jj)
      for (std::size_t ii = 0; ii < rows.size(); ++ii)
        b.matrix(static_cast<Index>(ii), static_cast<Index>(jj)) = A(rows[ii], cols[jj]);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

PruneResult prune_to_scalable(const DenseMatrix& A) {
  validate_nonnegative(A, "prune_to_scalable");
  std::vector<Index> rows(static_cast<std::size_t>(A.rows()));
  std::vector<Index> cols(static_cast<std::size_t>(A.cols()));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::iota(cols.begin(), cols.end(), Index{0});
  PruneResult out;

  auto submatrix = [&]() {
    DenseMatrix S(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t jj = 0; jj < cols.size(); ++jj)
      for (std::size_t ii = 0; ii < rows.size(); ++ii)
        S(static_cast<Index>(ii), static_cast<Index>(jj)) = A(rows[ii], cols[jj]);
    return S;
  };
  auto drop_row = [&](std::size_t local) {
    out.removed_rows.push_back(rows[local]);
    rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(local));
  };
  auto drop_col = [&](std::size_t local) {
    out.removed_cols.push_back(cols[local]);
    cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(local));
  };
  auto check_size = [&]() {
    if (rows.size() < 2 || cols.size() < 2)
      throw StructuralError(
          "prune_to_scalable: matrix reduced below 2x2; input is not scalable");
  };

  for (;;) {
    check_size();
    DenseMatrix S = submatrix();
    const std::vector<Index> rn = row_nonzero_counts(S);
    const std::vector<Index> cn = col_nonzero_counts(S);

    // Zero rows/columns go first; they make scaling outright impossible.
    if (auto it = std::find(rn.begin(), rn.end(), Index{0}); it != rn.end()) {
      drop_row(static_cast<std::size_t>(std::distance(rn.begin(), it)));
      continue;
    }
    if (auto it = std::find(cn.begin(), cn.end(), Index{0}); it != cn.end()) {
      drop_col(static_cast<std::size_t>(std::distance(cn.begin(), it)));
      continue;
    }

    const Index m = S.rows();
    const Index n = S.cols();
    if (!requirement_violations(rn, m, n).empty()) {
      const auto it = std::min_element(rn.begin(), rn.end());
      drop_row(static_cast<std::size_t>(std::distance(rn.begin(), it)));
      continue;
    }
    if (!requirement_violations(cn, n, m).empty()) {
      const auto it = std::min_element(cn.begin(), cn.end());
      drop_col(static_cast<std::size_t>(std::distance(cn.begin(), it)));
      continue;
    }
    out.matrix = std::move(S);
    break;
  }
  out.kept_rows = std::move(rows);
  out.kept_cols = std::move(cols);
  return out;
}

ScalingFactors scaling_factors_from_variances(const DenseMatrix& V, double tol,
                                              std::int64_t max_iter) {
  const Vector r = Vector::Constant(V.rows(), static_cast<double>(V.cols()));
  const Vector c = Vector::Constant(V.cols(), static_cast<double>(V.rows()));
  return sinkhorn_scale(V, r, c, tol, max_iter);
}

}  // namespace biwhiten
