#include "biwhiten/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <optional>

#include "biwhiten/adapt.hpp"
#include "biwhiten/io.hpp"
#include "biwhiten/mp_law.hpp"
#include "biwhiten/scaling.hpp"

namespace biwhiten {

namespace {

std::pair<std::string, std::string> split_head(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {text, ""};
  return {text.substr(0, colon), text.substr(colon + 1)};
}

std::vector<double> parse_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(sep, start);
    if (end == std::string::npos) end = text.size();
    try {
      std::size_t used = 0;
      const std::string piece = text.substr(start, end - start);
      out.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw DomainError("cannot parse number in '" + text + "'");
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

struct InputFlags {
  std::string path;
  std::string format = "auto";
  bool transpose = false;
  std::int64_t max_entries = kDefaultMaxEntries;

  void attach(CLI::App* cmd) {
    cmd->add_option("-i,--input", path, "input matrix (MatrixMarket or dense CSV)")->required();
    cmd->add_option("--format", format, "input format: auto|mtx|csv")
        ->check(CLI::IsMember({"auto", "mtx", "csv"}));
    cmd->add_flag("--transpose", transpose, "transpose on read (rows are variables)");
    cmd->add_option("--max-entries", max_entries,
                    "dense expansion guard in entries (0 disables)");
  }

  DenseMatrix read() const {
    MatrixSource src;
    src.path = path;
    src.format = format == "mtx"   ? MatrixSource::Format::matrix_market
                 : format == "csv" ? MatrixSource::Format::dense_csv
                                   : MatrixSource::Format::autodetect;
    src.transpose = transpose;
    src.max_entries = max_entries;
    return read_matrix(src);
  }

  OrderedJson provenance() const {
    OrderedJson j;
    j["path"] = path;
    j["format"] = format;
    j["transposed_on_read"] = transpose;
    return j;
  }
};

void emit(const OrderedJson& j, const std::string& output) {
  if (output.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_report(j, output);
}

OrderedJson fit_stats(const Esd& esd) {
  const MpLaw law(esd.aspect_ratio(), 1.0);
  const double d = ks_distance(esd, law);
  OrderedJson j;
  j["gamma"] = esd.aspect_ratio();
  j["ks_distance"] = d;
  j["ks_pvalue"] = ks_pvalue(d, esd.size());
  return j;
}

}  // namespace

VarianceModel parse_model(const std::string& text) {
  const auto [head, rest] = split_head(text);
  if (head == "poisson") return QvfParams{0.0, 1.0, 0.0};
  if (head == "binomial") {
    const double l = parse_numbers(rest, ',').at(0);
    if (l < 1.0) throw DomainError("binomial trials must be >= 1");
    return QvfParams{0.0, 1.0, -1.0 / l};
  }
  if (head == "negbinomial") {
    const double r = parse_numbers(rest, ',').at(0);
    if (r < 1.0) throw DomainError("negbinomial failures must be >= 1");
    return QvfParams{0.0, 1.0, 1.0 / r};
  }
  if (head == "genpoisson") {
    const double eta = parse_numbers(rest, ',').at(0);
    if (!(eta >= 0.0) || !(eta < 1.0)) throw DomainError("genpoisson dispersion must lie in [0, 1)");
    return QvfParams{0.0, 1.0 / ((1.0 - eta) * (1.0 - eta)), 0.0};
  }
  if (head == "qvf") {
    const auto v = parse_numbers(rest, ',');
    if (v.size() != 3) throw DomainError("qvf model needs a,b,c");
    return QvfParams{v[0], v[1], v[2]};
  }
  if (head == "alphabeta") {
    const auto v = parse_numbers(rest, ',');
    if (v.size() != 2) throw DomainError("alphabeta model needs alpha,beta");
    return AlphaBeta(v[0], v[1]);
  }
  throw DomainError("unknown model '" + text + "'");
}

NoiseFamily parse_family(const std::string& text) {
  const auto [head, rest] = split_head(text);
  if (head == "poisson") return NoiseFamily::poisson();
  if (head == "binomial")
    return NoiseFamily::binomial(static_cast<std::int64_t>(parse_numbers(rest, ',').at(0)));
  if (head == "negbinomial")
    return NoiseFamily::negbinomial(static_cast<std::int64_t>(parse_numbers(rest, ',').at(0)));
  if (head == "genpoisson") return NoiseFamily::genpoisson(parse_numbers(rest, ',').at(0));
  throw DomainError("unknown noise family '" + text + "'");
}

std::vector<double> parse_beta_grid(const std::string& text) {
  const auto v = parse_numbers(text, ':');
  if (v.size() != 3) throw DomainError("--beta-grid expects start:step:end");
  const auto [start, step, end] = std::tuple{v[0], v[1], v[2]};
  if (!(step > 0.0) || end < start) throw DomainError("--beta-grid expects start <= end, step > 0");
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double b = start + step * i;
    if (b > end + 1e-12) break;
    grid.push_back(std::min(b, end));
  }
  return grid;
}

FactorDist parse_factor_dist(const std::string& text) {
  const auto [head, rest] = split_head(text);
  if (head == "lognormal") return FactorDist::log_normal(parse_numbers(rest, ',').at(0));
  if (head == "expuniform") return FactorDist::exp_uniform(parse_numbers(rest, ',').at(0));
  if (head == "uniform") {
    const auto v = parse_numbers(rest, ',');
    if (v.size() != 2) throw DomainError("uniform factor needs lo,hi");
    return FactorDist::uniform(v[0], v[1]);
  }
  throw DomainError("unknown factor distribution '" + text + "'");
}

int cli_main(int argc, const char* const* argv) {
  apply_thread_cap_from_env();

  CLI::App app{"rank estimation for count matrices via diagonal scaling and the "
               "Marchenko-Pastur bulk edge"};
  app.require_subcommand(1);
  int exit_code = 0;

  // Shared option storage; each subcommand wires the subset it needs.
  InputFlags in;
  std::string model_text = "poisson";
  double zero_inflation = 1.0;
  double epsilon = 0.0;
  double tol = kDefaultScalingTol;
  std::int64_t max_iter = kDefaultScalingMaxIter;
  bool no_prune = false;
  std::string output;
  std::string histogram_path;
  Index top_k = 200;
  std::uint64_t seed = 1;
  std::string beta_grid_text = "0:0.05:1";
  Index trials = 0;
  std::string split_axis = "columns";

  auto model = [&]() -> VarianceModel { return parse_model(model_text); };
  auto zi = [&]() -> std::optional<ZeroInflation> {
    if (zero_inflation == 1.0) return std::nullopt;
    return ZeroInflation(zero_inflation);
  };
  auto options = [&]() {
    PipelineOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.epsilon = epsilon;
    opts.prune = !no_prune;
    return opts;
  };

  // --- rank ---------------------------------------------------------------
  auto* rank_cmd = app.add_subcommand("rank", "estimate the signal rank");
  in.attach(rank_cmd);
  rank_cmd->add_option("--model", model_text, "noise variance model");
  rank_cmd->add_option("--zero-inflation", zero_inflation, "observation probability p");
  rank_cmd->add_option("--epsilon", epsilon, "bulk-edge margin on the eigenvalue scale");
  rank_cmd->add_option("--tol", tol, "scaling tolerance");
  rank_cmd->add_option("--max-iter", max_iter, "scaling iteration cap");
  rank_cmd->add_flag("--no-prune", no_prune,
                     "strip zero rows/cols only; attempt scaling even if the existence "
                     "requirements fail");
  rank_cmd->add_option("--histogram", histogram_path, "write an eigenvalue histogram CSV");
  rank_cmd->add_option("--top-k", top_k, "spectrum entries kept in the report");
  rank_cmd->add_option("-o,--output", output, "report path (default: stdout)");
  rank_cmd->callback([&]() {
    const DenseMatrix Y = in.read();
    const BiwhitenReport report = run_pipeline(Y, model(), zi(), options());
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "rank";
    j["input"] = in.provenance();
    j["model"] = to_json(model());
    if (zi()) j["zero_inflation"] = zero_inflation;
    j["analysis"] = to_json(report, top_k);
    j["fit"] = fit_stats(report.esd);
    emit(j, output);
    if (!histogram_path.empty())
      write_histogram_csv(report.esd.eigenvalues, MpLaw(report.esd.aspect_ratio(), 1.0),
                          histogram_path);
  });

  // --- scale --------------------------------------------------------------
  auto* scale_cmd = app.add_subcommand("scale", "compute scaling factors and the scaled matrix");
  InputFlags scale_in;
  scale_in.attach(scale_cmd);
  std::string scaled_path;
  std::string scaled_format = "mtx";
  scale_cmd->add_option("--model", model_text, "noise variance model");
  scale_cmd->add_option("--zero-inflation", zero_inflation, "observation probability p");
  scale_cmd->add_option("--tol", tol, "scaling tolerance");
  scale_cmd->add_option("--max-iter", max_iter, "scaling iteration cap");
  scale_cmd->add_flag("--no-prune", no_prune, "strip zero rows/cols only");
  scale_cmd->add_option("--scaled-output", scaled_path, "write the scaled (kept) matrix here");
  scale_cmd->add_option("--scaled-format", scaled_format, "mtx|csv")
      ->check(CLI::IsMember({"mtx", "csv"}));
  scale_cmd->add_option("-o,--output", output, "factor report path (default: stdout)");
  scale_cmd->callback([&]() {
    const DenseMatrix Y = scale_in.read();
    const BiwhitenReport report = run_pipeline(Y, model(), zi(), options());
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "scale";
    j["input"] = scale_in.provenance();
    j["model"] = to_json(model());
    j["kept_rows"] = report.kept_rows;
    j["kept_cols"] = report.kept_cols;
    j["pruned_rows"] = report.pruned_rows;
    j["pruned_cols"] = report.pruned_cols;
    j["factors"] = to_json(report.factors);
    emit(j, output);
    if (!scaled_path.empty()) {
      DenseMatrix Yk(static_cast<Index>(report.kept_rows.size()),
                     static_cast<Index>(report.kept_cols.size()));
      for (std::size_t jj = 0; jj < report.kept_cols.size(); ++jj)
        for (std::size_t ii = 0; ii < report.kept_rows.size(); ++ii)
          Yk(static_cast<Index>(ii), static_cast<Index>(jj)) =
              Y(report.kept_rows[ii], report.kept_cols[jj]);
      const DenseMatrix scaled =
          report.factors.u().asDiagonal() * Yk * report.factors.v().asDiagonal();
      if (scaled_format == "mtx")
        write_matrix_market(scaled, scaled_path);
      else
        write_dense_csv(scaled, scaled_path);
    }
  });

  // --- fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "measure the spectrum's fit to the MP law");
  InputFlags fit_in;
  fit_in.attach(fit_cmd);
  double fit_alpha = 0.0, fit_beta = 0.0;
  auto* alpha_opt = fit_cmd->add_option("--alpha", fit_alpha, "alphabeta model: alpha");
  auto* beta_opt = fit_cmd->add_option("--beta", fit_beta, "alphabeta model: beta");
  fit_cmd->add_option("--model", model_text, "noise variance model");
  fit_cmd->add_option("--zero-inflation", zero_inflation, "observation probability p");
  fit_cmd->add_option("--tol", tol, "scaling tolerance");
  fit_cmd->add_option("--max-iter", max_iter, "scaling iteration cap");
  fit_cmd->add_flag("--no-prune", no_prune, "strip zero rows/cols only");
  fit_cmd->add_option("-o,--output", output, "report path (default: stdout)");
  fit_cmd->callback([&]() {
    VarianceModel m = *alpha_opt || *beta_opt
                          ? VarianceModel(AlphaBeta(*alpha_opt ? fit_alpha : 1.0, fit_beta))
                          : model();
    const DenseMatrix Y = fit_in.read();
    const BiwhitenReport report = run_pipeline(Y, m, zi(), options());
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "fit";
    j["input"] = fit_in.provenance();
    j["model"] = to_json(m);
    j["m"] = report.esd.m;
    j["n"] = report.esd.n;
    j.update(fit_stats(report.esd));
    j["rank"] = report.rank;
    emit(j, output);
  });

  // --- adapt --------------------------------------------------------------
  auto* adapt_cmd = app.add_subcommand("adapt", "select (alpha, beta) and validate by sample "
                                                "splitting");
  InputFlags adapt_in;
  adapt_in.attach(adapt_cmd);
  adapt_cmd->add_option("--beta-grid", beta_grid_text, "grid as start:step:end");
  adapt_cmd->add_option("--tol", tol, "scaling tolerance");
  adapt_cmd->add_option("--trials", trials, "split-validation trials (0 = selection only)");
  adapt_cmd->add_option("--split-axis", split_axis, "rows|columns")
      ->check(CLI::IsMember({"rows", "columns"}));
  adapt_cmd->add_option("--seed", seed, "seed for the split streams");
  adapt_cmd->add_option("-o,--output", output, "report path (default: stdout)");
  adapt_cmd->callback([&]() {
    DenseMatrix Y = adapt_in.read();
    if ((Y.array() == 0.0).any()) Y = prune_to_scalable(Y).matrix;
    const std::vector<double> grid = parse_beta_grid(beta_grid_text);
    const AdaptReport selection = select_beta(Y, grid, tol);
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "adapt";
    j["input"] = adapt_in.provenance();
    j["selection"] = to_json(selection);
    if (trials > 0) {
      const SplitAxis axis = split_axis == "rows" ? SplitAxis::rows : SplitAxis::columns;
      j["validation"] =
          to_json(split_validate(Y, trials, axis, seed, SplitSelection::adaptive(grid), tol));
    }
    emit(j, output);
  });

  // --- simulate -----------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "generate a seeded synthetic count matrix");
  Index sim_m = 300, sim_n = 1000, sim_r = 10;
  std::string signal_kind = "lowrank";
  std::string left_text = "lognormal:2";
  std::string right_text = "uniform:0,1";
  std::string strong_text;
  std::string family_text = "poisson";
  double sim_mean = 1.0;
  bool raw_scale = false;
  bool normalize_columns = false;
  std::string sim_out;
  std::string sim_format = "mtx";
  sim_cmd->add_option("-m,--rows", sim_m, "rows");
  sim_cmd->add_option("-n,--cols", sim_n, "columns");
  sim_cmd->add_option("-r,--rank", sim_r, "signal rank (lowrank signal)");
  sim_cmd->add_option("--signal", signal_kind, "lowrank|fullrank")
      ->check(CLI::IsMember({"lowrank", "fullrank"}));
  sim_cmd->add_option("--left", left_text, "left factor distribution");
  sim_cmd->add_option("--right", right_text, "right factor distribution");
  sim_cmd->add_option("--strong-factor", strong_text,
                      "adds a rank-1 spike drawn from this distribution");
  sim_cmd->add_option("--mean", sim_mean, "normalize the signal's mean entry to this value");
  sim_cmd->add_flag("--raw-scale", raw_scale, "skip mean normalization");
  sim_cmd->add_flag("--normalize-columns", normalize_columns,
                    "rescale columns to unit sums (probability matrices)");
  sim_cmd->add_option("--family", family_text, "noise family");
  sim_cmd->add_option("--zero-inflation", zero_inflation, "observation probability p");
  sim_cmd->add_option("--seed", seed, "generator seed");
  sim_cmd->add_option("-o,--output", sim_out, "matrix output path")->required();
  sim_cmd->add_option("--out-format", sim_format, "mtx|csv")
      ->check(CLI::IsMember({"mtx", "csv"}));
  sim_cmd->callback([&]() {
    SignalSpec spec;
    if (signal_kind == "fullrank") {
      spec = SignalSpec::full_rank_uniform(sim_m, sim_n);
    } else {
      spec = SignalSpec::low_rank(sim_m, sim_n, sim_r, parse_factor_dist(left_text),
                                  parse_factor_dist(right_text));
    }
    spec.mean_target = raw_scale ? std::nullopt : std::optional<double>(sim_mean);
    if (!strong_text.empty()) spec.strong_factor = parse_factor_dist(strong_text);
    spec.normalize_columns = normalize_columns;

    const DenseMatrix X = gen_signal(spec, seed);
    DenseMatrix Y = sample_counts(X, parse_family(family_text), seed);
    if (zero_inflation != 1.0) Y = zero_inflate(Y, zero_inflation, seed);
    if (sim_format == "mtx")
      write_matrix_market(Y, sim_out);
    else
      write_dense_csv(Y, sim_out);

    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "simulate";
    j["rows"] = sim_m;
    j["cols"] = sim_n;
    j["signal"] = signal_kind;
    if (signal_kind == "lowrank") {
      j["rank"] = sim_r;
      j["left"] = left_text;
      j["right"] = right_text;
      if (!strong_text.empty()) j["strong_factor"] = strong_text;
    }
    if (spec.mean_target) j["mean_target"] = *spec.mean_target;
    j["normalize_columns"] = normalize_columns;
    j["family"] = family_text;
    if (zero_inflation != 1.0) j["zero_inflation"] = zero_inflation;
    j["seed"] = seed;
    j["format"] = sim_format;
    j["path"] = sim_out;
    write_report(j, sim_out + ".json");
  });

  // --- diagnose -----------------------------------------------------------
  auto* diag_cmd = app.add_subcommand("diagnose", "report scalability of the zero pattern");
  InputFlags diag_in;
  diag_in.attach(diag_cmd);
  diag_cmd->add_option("--model", model_text, "noise variance model");
  diag_cmd->add_option("--zero-inflation", zero_inflation, "observation probability p");
  diag_cmd->add_option("-o,--output", output, "report path (default: stdout)");
  diag_cmd->callback([&]() {
    const DenseMatrix Y = diag_in.read();
    const VarianceMatrixResult vm = variance_matrix(Y, model(), zi());
    const ScalingDiagnosis diag = diagnose(vm.V);
    OrderedJson j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "diagnose";
    j["input"] = diag_in.provenance();
    j["model"] = to_json(model());
    j["clamped_variances"] = vm.clamped;
    j["diagnosis"] = to_json(diag);
    j["scalable"] = diag.clean();
    emit(j, output);
    if (!diag.clean()) exit_code = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}

}  // namespace biwhiten
