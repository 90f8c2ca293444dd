#include "biwhiten/io.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace biwhiten {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

void check_entry_budget(Index m, Index n, std::int64_t max_entries, const std::string& path) {
  if (m <= 0 || n <= 0) throw ParseError(path + ": dimensions must be positive");
  if (max_entries > 0 &&
      static_cast<std::int64_t>(m) > max_entries / static_cast<std::int64_t>(n))
    throw ParseError(path + ": dense expansion needs " + std::to_string(m) + " x " +
                     std::to_string(n) + " entries, above the configured bound of " +
                     std::to_string(max_entries));
}

void check_count_value(double v, const std::string& path, std::size_t line, bool require_counts) {
  if (!std::isfinite(v)) parse_fail(path, line, "non-finite value");
  if (require_counts && v < 0.0)
    parse_fail(path, line, "negative entry " + std::to_string(v) + " in count mode");
}

DenseMatrix read_matrix_market(const MatrixSource& src, std::istream& in) {
  const std::string& path = src.path;
  std::size_t lineno = 0;
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  ++lineno;

  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket") parse_fail(path, lineno, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") parse_fail(path, lineno, "unsupported object '" + object + "'");
  const bool coordinate = format == "coordinate";
  if (!coordinate && format != "array")
    parse_fail(path, lineno, "unsupported format '" + format + "'");
  const bool pattern = field == "pattern";
  if (field != "real" && field != "integer" && field != "double" && !pattern)
    parse_fail(path, lineno, "unsupported field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    parse_fail(path, lineno, "unsupported symmetry '" + symmetry + "'");
  if (pattern && !coordinate) parse_fail(path, lineno, "pattern requires coordinate format");

  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line[0] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line()) parse_fail(path, lineno, "missing size line");
  std::istringstream size_line(line);
  Index m = 0, n = 0;
  std::int64_t nnz = 0;
  if (coordinate) {
    if (!(size_line >> m >> n >> nnz)) parse_fail(path, lineno, "malformed size line");
  } else {
    if (!(size_line >> m >> n)) parse_fail(path, lineno, "malformed size line");
  }
  if (symmetric && m != n) parse_fail(path, lineno, "symmetric matrices must be square");
  check_entry_budget(m, n, src.max_entries, path);

  DenseMatrix A = DenseMatrix::Zero(m, n);
  if (coordinate) {
    if (nnz < 0 || nnz > static_cast<std::int64_t>(m) * static_cast<std::int64_t>(n))
      parse_fail(path, lineno, "entry count out of range");
    for (std::int64_t k = 0; k < nnz; ++k) {
      if (!next_data_line()) parse_fail(path, lineno, "expected " + std::to_string(nnz) +
                                                          " entries, file ended early");
      std::istringstream entry(line);
      Index i = 0, j = 0;
      double v = 1.0;
      if (!(entry >> i >> j)) parse_fail(path, lineno, "malformed coordinate entry");
      if (!pattern && !(entry >> v)) parse_fail(path, lineno, "missing value");
      if (i < 1 || i > m || j < 1 || j > n)
        parse_fail(path, lineno, "index (" + std::to_string(i) + ", " + std::to_string(j) +
                                     ") outside " + std::to_string(m) + " x " + std::to_string(n));
      check_count_value(v, path, lineno, src.require_counts);
      A(i - 1, j - 1) += v;  // duplicates accumulate
      if (symmetric && i != j) A(j - 1, i - 1) += v;
    }
  } else {
    // Array data is column-major; symmetric files store the lower triangle.
    for (Index j = 0; j < n; ++j) {
      for (Index i = symmetric ? j : Index{0}; i < m; ++i) {
        if (!next_data_line()) parse_fail(path, lineno, "array data ended early");
        std::istringstream entry(line);
        double v = 0.0;
        if (!(entry >> v)) parse_fail(path, lineno, "malformed array value");
        check_count_value(v, path, lineno, src.require_counts);
        A(i, j) = v;
        if (symmetric) A(j, i) = v;
      }
    }
  }
  return A;
}

DenseMatrix read_dense_csv(const MatrixSource& src, std::istream& in) {
  const std::string& path = src.path;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t col = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      ++col;
      const char* first = line.data() + start;
      const char* last = line.data() + comma;
      while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
      while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last)
        parse_fail(path, lineno,
                   "field " + std::to_string(col) + " is not numeric: '" +
                       std::string(first, last) + "'");
      check_count_value(v, path, lineno, src.require_counts);
      row.push_back(v);
      start = comma + 1;
      if (comma == line.size()) break;
    }
    if (width == 0)
      width = row.size();
    else if (row.size() != width)
      parse_fail(path, lineno, "expected " + std::to_string(width) + " fields, got " +
                                   std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  const Index m = static_cast<Index>(rows.size());
  const Index n = static_cast<Index>(width);
  check_entry_budget(m, n, src.max_entries, path);
  DenseMatrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j)
      A(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return A;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

OrderedJson index_array(const std::vector<Index>& v) {
  OrderedJson out = OrderedJson::array();
  for (Index i : v) out.push_back(i);
  return out;
}

OrderedJson truncated_spectrum(const std::vector<double>& values, Index top_k) {
  OrderedJson out = OrderedJson::array();
  const std::size_t k = top_k <= 0 ? values.size()
                                   : std::min<std::size_t>(values.size(),
                                                           static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < k; ++i) out.push_back(values[i]);
  return out;
}

OrderedJson histogram_json(const std::vector<double>& eigenvalues, double lo, double hi) {
  constexpr int kBins = 50;
  std::vector<std::int64_t> counts(kBins, 0);
  std::int64_t below = 0, above = 0;
  for (double v : eigenvalues) {
    if (v < lo) {
      ++below;
    } else if (v > hi) {
      ++above;
    } else {
      int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
      if (b == kBins) b = kBins - 1;
      ++counts[static_cast<std::size_t>(b)];
    }
  }
  OrderedJson out;
  out["support"] = {lo, hi};
  out["bins"] = counts;
  out["below"] = below;
  out["above"] = above;
  return out;
}

}  // namespace

DenseMatrix read_matrix(const MatrixSource& src) {
  std::ifstream in(src.path);
  if (!in) throw ParseError(src.path + ": cannot open file");
  MatrixSource::Format fmt = src.format;
  if (fmt == MatrixSource::Format::autodetect) {
    const auto dot = src.path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : lower(src.path.substr(dot + 1));
    if (ext == "mtx" || ext == "mm") {
      fmt = MatrixSource::Format::matrix_market;
    } else if (ext == "csv") {
      fmt = MatrixSource::Format::dense_csv;
    } else {
      fmt = in.peek() == '%' ? MatrixSource::Format::matrix_market
                             : MatrixSource::Format::dense_csv;
    }
  }
  DenseMatrix A = fmt == MatrixSource::Format::matrix_market ? read_matrix_market(src, in)
                                                             : read_dense_csv(src, in);
  if (src.transpose) return A.transpose();
  return A;
}

void write_matrix_market(const DenseMatrix& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  std::int64_t nnz = 0;
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << ' ' << A.cols() << ' ' << nnz << '\n';
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0)
        out << (i + 1) << ' ' << (j + 1) << ' ' << format_double(A(i, j)) << '\n';
  if (!out) throw Error(path + ": write failed");
}

void write_dense_csv(const DenseMatrix& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) out << ',';
      out << format_double(A(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error(path + ": write failed");
}

OrderedJson to_json(const ScalingDiagnosis& diag) {
  OrderedJson out;
  out["zero_rows"] = index_array(diag.zero_rows);
  out["zero_cols"] = index_array(diag.zero_cols);
  out["block_count"] = diag.blocks.size();
  OrderedJson blocks = OrderedJson::array();
  for (const auto& [rows, cols] : diag.blocks)
    blocks.push_back({{"rows", index_array(rows)}, {"cols", index_array(cols)}});
  out["blocks"] = std::move(blocks);
  OrderedJson rv = OrderedJson::array();
  for (const auto& [k, count] : diag.row_violations)
    rv.push_back({{"k", k}, {"count", count}});
  out["row_violations"] = std::move(rv);
  OrderedJson cv = OrderedJson::array();
  for (const auto& [l, count] : diag.col_violations)
    cv.push_back({{"l", l}, {"count", count}});
  out["col_violations"] = std::move(cv);
  return out;
}

OrderedJson to_json(const ScalingFactors& factors) {
  OrderedJson out;
  out["x"] = std::vector<double>(factors.x.begin(), factors.x.end());
  out["y"] = std::vector<double>(factors.y.begin(), factors.y.end());
  out["iterations"] = factors.iterations;
  out["residual"] = factors.residual;
  return out;
}

OrderedJson to_json(const VarianceModel& model) {
  OrderedJson out;
  if (std::holds_alternative<QvfParams>(model)) {
    const auto& p = std::get<QvfParams>(model);
    out["type"] = "qvf";
    out["a"] = p.a;
    out["b"] = p.b;
    out["c"] = p.c;
  } else {
    const auto& ab = std::get<AlphaBeta>(model);
    out["type"] = "alphabeta";
    out["alpha"] = ab.alpha;
    out["beta"] = ab.beta;
  }
  return out;
}

OrderedJson to_json(const BiwhitenReport& report, Index top_k) {
  OrderedJson out;
  out["schema_version"] = kReportSchemaVersion;
  out["input_rows"] = report.input_rows;
  out["input_cols"] = report.input_cols;
  out["transposed"] = report.transposed;
  out["diagnosis"] = to_json(report.diagnosis);
  out["pruned_rows"] = index_array(report.pruned_rows);
  out["pruned_cols"] = index_array(report.pruned_cols);
  out["kept_rows"] = report.kept_rows.size();
  out["kept_cols"] = report.kept_cols.size();
  out["clamped_variances"] = report.clamped_variances;
  out["epsilon"] = report.epsilon;
  out["threshold"] = report.threshold;
  out["rank"] = report.rank;
  out["eigenvalues_top"] = truncated_spectrum(report.esd.eigenvalues, top_k);
  out["singular_values_top"] = truncated_spectrum(report.singular_values, top_k);
  {
    const double gamma = report.esd.m > 0 ? report.esd.aspect_ratio() : 1.0;
    const MpLaw law(gamma > 0.0 && gamma <= 1.0 ? gamma : 1.0, 1.0);
    out["histogram"] = histogram_json(report.esd.eigenvalues, law.beta_minus(), law.beta_plus());
  }
  OrderedJson blocks = OrderedJson::array();
  for (const BlockReport& b : report.blocks) {
    OrderedJson jb;
    jb["rows"] = b.rows.size();
    jb["cols"] = b.cols.size();
    jb["row_indices"] = index_array(b.rows);
    jb["col_indices"] = index_array(b.cols);
    jb["threshold"] = b.threshold;
    jb["rank"] = b.rank;
    jb["iterations"] = b.factors.iterations;
    jb["residual"] = b.factors.residual;
    jb["eigenvalues_top"] = truncated_spectrum(b.esd.eigenvalues, top_k);
    const MpLaw law(b.esd.aspect_ratio(), 1.0);
    jb["histogram"] = histogram_json(b.esd.eigenvalues, law.beta_minus(), law.beta_plus());
    blocks.push_back(std::move(jb));
  }
  out["blocks"] = std::move(blocks);
  return out;
}

OrderedJson to_json(const AdaptReport& report) {
  OrderedJson out;
  out["schema_version"] = kReportSchemaVersion;
  out["beta_grid"] = report.beta_grid;
  OrderedJson per = OrderedJson::array();
  for (const AdaptPoint& pt : report.per_beta) {
    OrderedJson jp;
    jp["beta"] = pt.beta;
    jp["failed"] = pt.failed;
    if (pt.failed) {
      jp["error"] = pt.error;
    } else {
      jp["alpha"] = pt.alpha;
      jp["ks"] = pt.ks;
    }
    per.push_back(std::move(jp));
  }
  out["per_beta"] = std::move(per);
  out["selected"] = {{"alpha", report.selected.alpha}, {"beta", report.selected.beta}};
  out["min_ks"] = report.min_ks;
  return out;
}

OrderedJson to_json(const SplitValidation& validation) {
  OrderedJson out;
  out["schema_version"] = kReportSchemaVersion;
  out["trials"] = validation.trials;
  out["failed"] = validation.failed;
  out["mean_ks"] = validation.mean_ks;
  out["mean_pvalue"] = validation.mean_pvalue;
  OrderedJson per = OrderedJson::array();
  for (const auto& t : validation.per_trial) {
    OrderedJson jt;
    jt["failed"] = t.failed;
    if (t.failed) {
      jt["error"] = t.error;
    } else {
      jt["ks"] = t.ks;
      jt["pvalue"] = t.pvalue;
      jt["model"] = to_json(t.model);
    }
    per.push_back(std::move(jt));
  }
  out["per_trial"] = std::move(per);
  return out;
}

void write_report(const OrderedJson& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  out << report.dump(2) << '\n';
  if (!out) throw Error(path + ": write failed");
}

OrderedJson read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  OrderedJson j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void write_histogram_csv(const std::vector<double>& eigenvalues, const MpLaw& law,
                         const std::string& path) {
  constexpr int kBins = 50;
  const double lo = law.beta_minus();
  const double hi = law.beta_plus();
  std::vector<std::int64_t> counts(kBins, 0);
  std::int64_t below = 0, above = 0;
  for (double v : eigenvalues) {
    if (v < lo) {
      ++below;
    } else if (v > hi) {
      ++above;
    } else {
      int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
      if (b == kBins) b = kBins - 1;
      ++counts[static_cast<std::size_t>(b)];
    }
  }
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  out << "bin_low,bin_high,count\n";
  out << "-inf," << format_double(lo) << ',' << below << '\n';
  for (int b = 0; b < kBins; ++b) {
    const double a = lo + (hi - lo) * b / kBins;
    const double c = lo + (hi - lo) * (b + 1) / kBins;
    out << format_double(a) << ',' << format_double(c) << ',' << counts[static_cast<std::size_t>(b)]
        << '\n';
  }
  out << format_double(hi) << ",inf," << above << '\n';
  if (!out) throw Error(path + ": write failed");
}

void apply_thread_cap_from_env() {
  int threads = 1;
  if (const char* env = std::getenv("BIWHITEN_THREADS")) {
    threads = std::atoi(env);
    if (threads < 1) threads = 1;
  }
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads);
}

}  // namespace biwhiten
