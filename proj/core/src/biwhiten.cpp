#include "biwhiten/biwhiten.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace biwhiten {

namespace {

DenseMatrix take(const DenseMatrix& A, const std::vector<Index>& rows,
                 const std::vector<Index>& cols) {
  DenseMatrix S(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t jj = 0; jj < cols.size(); ++jj)
    for (std::size_t ii = 0; ii < rows.size(); ++ii)
      S(static_cast<Index>(ii), static_cast<Index>(jj)) = A(rows[ii], cols[jj]);
  return S;
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

// Strips zero rows/columns only, looping because a removal can empty another
// line. Used when requirement-based pruning is disabled.
void strip_zero_lines(const DenseMatrix& V, std::vector<Index>& rows, std::vector<Index>& cols,
                      std::vector<Index>& removed_rows, std::vector<Index>& removed_cols) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = rows.begin(); it != rows.end();) {
      bool zero = true;
      for (Index j : cols)
        if (V(*it, j) != 0.0) {
          zero = false;
          break;
        }
      if (zero) {
        removed_rows.push_back(*it);
        it = rows.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
    for (auto it = cols.begin(); it != cols.end();) {
      bool zero = true;
      for (Index i : rows)
        if (V(i, *it) != 0.0) {
          zero = false;
          break;
        }
      if (zero) {
        removed_cols.push_back(*it);
        it = cols.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
}

}  // namespace

VarianceMatrixResult variance_matrix(const DenseMatrix& Y, const VarianceModel& model,
                                     const std::optional<ZeroInflation>& zi) {
  if (!Y.allFinite()) throw DomainError("variance_matrix: observations must be finite");
  VarianceMatrixResult out;
  out.V.resize(Y.rows(), Y.cols());

  // The direct (alpha, beta) estimator needs no QVF conversion; converting
  // eagerly would also reject the valid alpha beta = 1 corner.
  const bool plain_alphabeta = std::holds_alternative<AlphaBeta>(model) && !zi;
  const QvfParams qvf = plain_alphabeta ? QvfParams{}
                        : std::holds_alternative<QvfParams>(model)
                            ? std::get<QvfParams>(model)
                            : alphabeta_to_qvf(std::get<AlphaBeta>(model));
  for (Index j = 0; j < Y.cols(); ++j) {
    for (Index i = 0; i < Y.rows(); ++i) {
      double est;
      if (plain_alphabeta)
        est = alphabeta_estimate(std::get<AlphaBeta>(model), Y(i, j));
      else if (zi)
        est = zero_inflated_estimate(qvf, *zi, Y(i, j));
      else
        est = qvf_unbiased_estimate(qvf, Y(i, j));
      if (est < 0.0) {
        est = 0.0;
        ++out.clamped;
      }
      out.V(i, j) = est;
    }
  }
  return out;
}

BiwhitenResult biwhiten(const DenseMatrix& Y, const VarianceModel& model, double tol,
                        const std::optional<ZeroInflation>& zi, std::int64_t max_iter) {
  VarianceMatrixResult vm = variance_matrix(Y, model, zi);
  ScalingFactors factors = scaling_factors_from_variances(vm.V, tol, max_iter);
  const Vector u = factors.u();
  const Vector v = factors.v();
  DenseMatrix y_hat = u.asDiagonal() * Y * v.asDiagonal();
  return {std::move(y_hat), std::move(factors), vm.clamped};
}

Esd spectrum(const DenseMatrix& y_hat) {
  if (!y_hat.allFinite()) throw DomainError("spectrum: matrix must be finite");
  const bool flip = y_hat.rows() > y_hat.cols();
  const Index mm = flip ? y_hat.cols() : y_hat.rows();
  const Index nn = flip ? y_hat.rows() : y_hat.cols();
  Eigen::BDCSVD<DenseMatrix> svd(flip ? y_hat.transpose() : y_hat);
  if (svd.info() != Eigen::Success)
    throw Error("spectrum: singular value decomposition failed");
  const Vector& sv = svd.singularValues();
  std::vector<double> eigs(static_cast<std::size_t>(sv.size()));
  for (Index k = 0; k < sv.size(); ++k)
    eigs[static_cast<std::size_t>(k)] = sv(k) * sv(k) / static_cast<double>(nn);
  return Esd(std::move(eigs), mm, nn);
}

Index estimate_rank(const Esd& esd, double epsilon) {
  if (!(epsilon >= 0.0)) throw DomainError("estimate_rank: epsilon must be nonnegative");
  if (esd.size() == 0) return 0;
  const double root = 1.0 + std::sqrt(esd.aspect_ratio());
  const double threshold = root * root + epsilon;
  Index rank = 0;
  for (double lambda : esd.eigenvalues) {
    if (lambda > threshold)
      ++rank;
    else
      break;  // descending order
  }
  return rank;
}

BiwhitenReport run_pipeline(const DenseMatrix& Y, const VarianceModel& model,
                            const std::optional<ZeroInflation>& zi, const PipelineOptions& opts) {
  BiwhitenReport report;
  report.input_rows = Y.rows();
  report.input_cols = Y.cols();
  report.epsilon = opts.epsilon;
  report.transposed = Y.rows() > Y.cols();

  const DenseMatrix Yw = report.transposed ? DenseMatrix(Y.transpose()) : Y;
  VarianceMatrixResult vm = variance_matrix(Yw, model, zi);
  report.clamped_variances = vm.clamped;
  report.diagnosis = diagnose(vm.V);

  // Repair the zero pattern; removals apply jointly to Y and its variances.
  std::vector<Index> kept_rows = all_indices(Yw.rows());
  std::vector<Index> kept_cols = all_indices(Yw.cols());
  std::vector<Index> removed_rows, removed_cols;
  if (!report.diagnosis.clean()) {
    if (opts.prune) {
      PruneResult pr = prune_to_scalable(vm.V);
      kept_rows = pr.kept_rows;
      kept_cols = pr.kept_cols;
      removed_rows = pr.removed_rows;
      removed_cols = pr.removed_cols;
    } else {
      strip_zero_lines(vm.V, kept_rows, kept_cols, removed_rows, removed_cols);
    }
  }
  const DenseMatrix Vk = take(vm.V, kept_rows, kept_cols);
  const DenseMatrix Yk = take(Yw, kept_rows, kept_cols);

  std::vector<Block> blocks = decompose_blocks(Vk);
  Vector x_all = Vector::Zero(Vk.rows());
  Vector y_all = Vector::Zero(Vk.cols());
  std::vector<std::pair<double, double>> merged;  // (eigenvalue, singular value)
  std::int64_t max_iters = 0;
  double max_residual = 0.0;

  for (const Block& b : blocks) {
    const Index d1 = b.matrix.rows();
    const Index d2 = b.matrix.cols();
    if (d1 < 2 || d2 < 2)
      throw StructuralError("run_pipeline: block of size " + std::to_string(d1) + "x" +
                            std::to_string(d2) +
                            " is too small to scale; enable pruning or clean the input");
    const Vector rt = Vector::Constant(d1, static_cast<double>(d2));
    const Vector ct = Vector::Constant(d2, static_cast<double>(d1));
    ScalingFactors f = sinkhorn_scale(b.matrix, rt, ct, opts.tol, opts.max_iter);
    max_iters = std::max(max_iters, f.iterations);
    max_residual = std::max(max_residual, f.residual);

    DenseMatrix yb = take(Yk, b.rows, b.cols);
    const Vector u = f.u();
    const Vector v = f.v();
    yb = u.asDiagonal() * yb * v.asDiagonal();
    Esd esd = spectrum(yb);
    const Index rank = estimate_rank(esd, opts.epsilon);
    const double root = 1.0 + std::sqrt(esd.aspect_ratio());

    std::vector<double> svs(esd.eigenvalues.size());
    for (std::size_t k = 0; k < svs.size(); ++k) {
      svs[k] = std::sqrt(esd.eigenvalues[k] * static_cast<double>(esd.n));
      merged.emplace_back(esd.eigenvalues[k], svs[k]);
    }
    for (std::size_t ii = 0; ii < b.rows.size(); ++ii) x_all(b.rows[ii]) = f.x(static_cast<Index>(ii));
    for (std::size_t jj = 0; jj < b.cols.size(); ++jj) y_all(b.cols[jj]) = f.y(static_cast<Index>(jj));

    BlockReport br{b.rows, b.cols, std::move(f), std::move(esd), std::move(svs),
                   root * root + opts.epsilon, rank};
    // Map block indices back through the kept-index lists.
    for (Index& i : br.rows) i = kept_rows[static_cast<std::size_t>(i)];
    for (Index& j : br.cols) j = kept_cols[static_cast<std::size_t>(j)];
    report.rank += rank;
    report.blocks.push_back(std::move(br));
  }

  std::sort(merged.begin(), merged.end(), std::greater<>());
  std::vector<double> eigs, svs;
  eigs.reserve(merged.size());
  svs.reserve(merged.size());
  for (const auto& [e, s] : merged) {
    eigs.push_back(e);
    svs.push_back(s);
  }
  const Index mm = std::min(Yk.rows(), Yk.cols());
  const Index nn = std::max(Yk.rows(), Yk.cols());
  const Index m_eff = static_cast<Index>(eigs.size());
  report.esd = Esd(std::move(eigs), m_eff, std::max(nn, m_eff));
  report.singular_values = std::move(svs);
  {
    const double root = 1.0 + std::sqrt(static_cast<double>(mm) / static_cast<double>(nn));
    report.threshold = root * root + opts.epsilon;
  }
  report.factors =
      ScalingFactors{std::move(x_all), std::move(y_all), max_iters, max_residual};

  // Everything above ran in the oriented frame; translate indices and factors
  // back to the input orientation.
  report.pruned_rows = std::move(removed_rows);
  report.pruned_cols = std::move(removed_cols);
  report.kept_rows = std::move(kept_rows);
  report.kept_cols = std::move(kept_cols);
  if (report.transposed) {
    std::swap(report.pruned_rows, report.pruned_cols);
    std::swap(report.kept_rows, report.kept_cols);
    std::swap(report.factors.x, report.factors.y);
    for (BlockReport& br : report.blocks) {
      std::swap(br.rows, br.cols);
      std::swap(br.factors.x, br.factors.y);
    }
    std::swap(report.diagnosis.zero_rows, report.diagnosis.zero_cols);
    std::swap(report.diagnosis.row_violations, report.diagnosis.col_violations);
    for (auto& [rows, cols] : report.diagnosis.blocks) std::swap(rows, cols);
  }
  return report;
}

}  // namespace biwhiten
