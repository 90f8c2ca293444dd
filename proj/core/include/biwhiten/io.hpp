#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "biwhiten/adapt.hpp"
#include "biwhiten/biwhiten.hpp"
#include "biwhiten/mp_law.hpp"
#include "biwhiten/types.hpp"

namespace biwhiten {

using OrderedJson = nlohmann::ordered_json;

inline constexpr const char* kReportSchemaVersion = "1";
inline constexpr std::int64_t kDefaultMaxEntries = 250'000'000;

struct MatrixSource {
  enum class Format { autodetect, matrix_market, dense_csv };
  std::string path;
  Format format = Format::autodetect;
  bool transpose = false;       // rows-are-variables hint
  bool require_counts = true;   // reject negative entries
  std::int64_t max_entries = kDefaultMaxEntries;  // dense expansion guard; 0 disables
};

// Reads MatrixMarket (coordinate or array; real, integer or pattern; general
// or symmetric) and dense numeric CSV into memory. Sparse inputs are expanded
// to a dense m x n matrix, bounded by max_entries.
DenseMatrix read_matrix(const MatrixSource& src);

void write_matrix_market(const DenseMatrix& A, const std::string& path);
void write_dense_csv(const DenseMatrix& A, const std::string& path);

// JSON views of the analysis reports; field order is fixed so identical runs
// serialize byte-identically.
OrderedJson to_json(const ScalingDiagnosis& diag);
OrderedJson to_json(const ScalingFactors& factors);
OrderedJson to_json(const VarianceModel& model);
OrderedJson to_json(const BiwhitenReport& report, Index top_k = 200);
OrderedJson to_json(const AdaptReport& report);
OrderedJson to_json(const SplitValidation& validation);

void write_report(const OrderedJson& report, const std::string& path);
OrderedJson read_report(const std::string& path);

// 50 equal bins across the MP support plus one underflow and one overflow
// bin; counts always sum to the number of eigenvalues.
void write_histogram_csv(const std::vector<double>& eigenvalues, const MpLaw& law,
                         const std::string& path);

// Caps Eigen/OpenMP parallelism from the BIWHITEN_THREADS environment
// variable; unset means single-threaded for reproducible output.
void apply_thread_cap_from_env();

}  // namespace biwhiten
