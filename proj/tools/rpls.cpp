// Command line front end: fit, predict, simulate, operator.
//
// Exit codes: 0 success, 2 input/config validation failure, 3 numeric failure
// during fitting or operator construction.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpls/rpls.hpp"

namespace {

using rpls::Matrix;
using rpls::Vector;

// Validation failures (bad files, shapes, configs) exit 2; numeric failures
// (degenerate fits, indefinite operators, singular systems) exit 3.
int classify_exit(const rpls::Error& e) {
  const auto* p = &e;
  if (dynamic_cast<const rpls::IoError*>(p) || dynamic_cast<const rpls::ConfigError*>(p) ||
      dynamic_cast<const rpls::DimensionMismatch*>(p) || dynamic_cast<const rpls::BadShape*>(p) ||
      dynamic_cast<const rpls::BadRange*>(p) || dynamic_cast<const rpls::BadGroups*>(p) ||
      dynamic_cast<const rpls::BadBandwidth*>(p) || dynamic_cast<const rpls::EmptyInput*>(p) ||
      dynamic_cast<const rpls::SingletonOrEmptyClass*>(p) ||
      dynamic_cast<const rpls::TooFewSamples*>(p) ||
      dynamic_cast<const rpls::AsymmetricInput*>(p) ||
      dynamic_cast<const rpls::NonOrthogonalFactors*>(p))
    return 2;
  return 3;
}

template <class F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const rpls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int resolve_threads(int requested) {
  if (requested < 0) throw rpls::ConfigError("--threads must be positive");
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RPLS_THREADS")) {
    const long v = rpls::parse_integer(env, "RPLS_THREADS");
    if (v < 1) throw rpls::ConfigError("RPLS_THREADS must be a positive integer");
    return int(v);
  }
  return 1;
}

// Canonical key=value rendering of the effective options; its FNV-1a hash goes
// into every output header so files can be traced back to the invocation.
struct ConfigKeys {
  std::ostringstream out;

  explicit ConfigKeys(const std::string& command) { out << command; }

  ConfigKeys& add(const char* key, const std::string& value) {
    out << ';' << key << '=' << value;
    return *this;
  }
  ConfigKeys& add(const char* key, const char* value) { return add(key, std::string(value)); }
  ConfigKeys& add(const char* key, bool value) { return add(key, value ? "1" : "0"); }
  ConfigKeys& add(const char* key, double value) { return add(key, rpls::format_double(value)); }
  template <class T>
  ConfigKeys& add(const char* key, T value) {
    return add(key, std::to_string(value));
  }

  rpls::OutputMeta meta(std::uint64_t seed) const {
    rpls::OutputMeta m;
    m.config_hash = rpls::fnv1a_hex(out.str());
    m.seed = seed;
    return m;
  }
};

rpls::PenaltyFamily family_from_name(const std::string& s) {
  if (s == "none") return rpls::PenaltyFamily::none;
  if (s == "lasso") return rpls::PenaltyFamily::lasso;
  if (s == "group_lasso") return rpls::PenaltyFamily::group_lasso;
  throw rpls::ConfigError("unknown penalty family '" + s + "' (none, lasso, group_lasso)");
}

std::vector<std::string> read_labels(const std::string& path) {
  const rpls::TextTable t = rpls::read_csv_text_file(path);
  if (t.columns.size() != 1)
    throw rpls::ConfigError("labels file '" + path + "' must have exactly one column, found " +
                            std::to_string(t.columns.size()));
  std::vector<std::string> labels;
  labels.reserve(t.rows.size());
  for (const auto& row : t.rows) labels.push_back(row[0]);
  return labels;
}

// One group id per variable, single column; variables sharing an id form a
// group, groups ordered by id.
std::vector<std::vector<int>> read_groups(const std::string& path) {
  const rpls::TextTable t = rpls::read_csv_text_file(path);
  if (t.columns.size() != 1)
    throw rpls::ConfigError("groups file '" + path + "' must have exactly one column");
  std::map<long, std::vector<int>> by_id;
  for (size_t i = 0; i < t.rows.size(); ++i)
    by_id[rpls::parse_integer(t.rows[i][0], "groups file")].push_back(int(i));
  std::vector<std::vector<int>> groups;
  groups.reserve(by_id.size());
  for (auto& [id, members] : by_id) groups.push_back(std::move(members));
  return groups;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string x_path, y_path, labels_path, output;
  std::string groups_path, operator_path, report_path, loadings_path, selection_path;
  std::string penalty = "none";
  int factors = 1;
  double lambda = 0;
  bool select_lambda = false;
  int grid = 25;
  bool nonnegative = false;
  bool scale_y = false;
  std::uint64_t seed = 0;
  int threads = 0;
};

int cmd_fit(const FitOptions& opt) {
  const int threads = resolve_threads(opt.threads);
  (void)threads;  // fit is a single pass; validated for interface consistency

  const bool classify = !opt.labels_path.empty();
  if (classify == !opt.y_path.empty())
    throw rpls::ConfigError("fit: exactly one of --y / --labels is required");
  if (classify && opt.scale_y)
    throw rpls::ConfigError("fit: --scale-y applies to --y fits only");
  if (!opt.selection_path.empty() && !opt.select_lambda)
    throw rpls::ConfigError("fit: --selection-report needs --select-lambda");

  rpls::PenaltySpec spec;
  spec.family = family_from_name(opt.penalty);
  spec.nonnegative = opt.nonnegative;
  spec.lambda = opt.lambda;
  if (spec.family == rpls::PenaltyFamily::group_lasso) {
    if (opt.groups_path.empty())
      throw rpls::ConfigError("fit: --penalty group_lasso needs --groups");
    spec.groups = read_groups(opt.groups_path);
  } else if (!opt.groups_path.empty()) {
    throw rpls::ConfigError("fit: --groups applies to --penalty group_lasso only");
  }

  const rpls::CsvTable xt = rpls::read_csv_file(opt.x_path);
  const Matrix& X = xt.values;

  rpls::QuadraticOperator qop;
  const Matrix* Q = nullptr;
  if (!opt.operator_path.empty()) {
    qop = rpls::load_operator_file(opt.operator_path);
    Q = &qop.Q;
  }

  std::vector<std::vector<std::string>> selection_rows;
  rpls::LambdaRule rule;
  if (opt.select_lambda) {
    if (opt.grid < 2) throw rpls::ConfigError("fit: --grid must be at least 2");
    rule = [&](const rpls::CrossProduct& cp, int k) {
      const double lmax = rpls::lambda_max(cp, spec);
      const auto grid = rpls::lambda_grid(lmax, opt.grid);
      const auto pick = rpls::bic_select_lambda(cp, spec, grid, Q, rpls::SolverOptions{});
      for (int i = 0; i < grid.size(); ++i)
        selection_rows.push_back({std::to_string(k + 1), rpls::format_double(grid[i]),
                                  rpls::format_double(pick.bic[size_t(i)]),
                                  std::to_string(pick.df[size_t(i)]),
                                  pick.degenerate[size_t(i)] ? "1" : "0"});
      return pick.chosen;
    };
  }

  rpls::ModelFile mf;
  if (classify) {
    const auto labels = read_labels(opt.labels_path);
    if (Eigen::Index(labels.size()) != X.rows())
      throw rpls::DimensionMismatch("fit: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(X.rows()) + " samples");
    const rpls::ClassEncoding enc = rpls::encode_classes(labels);
    const auto data = rpls::standardize(X, enc.Y, true, false);
    mf.model = rpls::fit(data, opt.factors, spec, Q, {}, rule);
    mf.has_lda = true;
    mf.lda = rpls::lda_fit(mf.model.Z, enc);
  } else {
    const rpls::CsvTable yt = rpls::read_csv_file(opt.y_path);
    const auto data = rpls::standardize(X, yt.values, true, opt.scale_y);
    mf.model = rpls::fit(data, opt.factors, spec, Q, {}, rule);
    mf.has_regression = true;
    mf.regression = rpls::fit_regression(mf.model, yt.values);
  }
  mf.n_train = long(X.rows());

  // File paths stay out of the hash: the same data and options must produce
  // byte-identical outputs wherever the files happen to live.
  const auto meta = ConfigKeys("fit")
                        .add("mode", classify ? "classify" : "regress")
                        .add("factors", opt.factors)
                        .add("penalty", opt.penalty)
                        .add("lambda", opt.lambda)
                        .add("select_lambda", opt.select_lambda)
                        .add("grid", opt.grid)
                        .add("grouped", !opt.groups_path.empty())
                        .add("nonnegative", opt.nonnegative)
                        .add("structured", Q != nullptr)
                        .add("scale_y", opt.scale_y)
                        .add("seed", opt.seed)
                        .meta(opt.seed);

  rpls::save_model_file(opt.output, mf, meta);

  const auto& diag = mf.model.diagnostics;
  std::cout << "fitted " << mf.model.K() << " factor(s) on " << X.rows() << " samples, "
            << mf.model.p() << " variables (" << (classify ? "classification" : "regression")
            << ", penalty " << opt.penalty << ")\n";
  for (size_t k = 0; k < diag.size(); ++k)
    std::cout << "  factor " << (k + 1) << ": lambda " << rpls::format_double(diag[k].lambda)
              << ", support " << diag[k].support << "/" << mf.model.p() << ", iterations "
              << diag[k].iterations << (diag[k].converged ? "" : " (not converged)")
              << ", objective " << rpls::format_double(diag[k].objective) << "\n";
  if (!mf.model.stop_reason.empty())
    std::cout << "stopped before factor " << (mf.model.K() + 1) << ": " << mf.model.stop_reason
              << "\n";
  std::cout << "wrote model: " << opt.output << "\n";

  if (!opt.report_path.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (size_t k = 0; k < diag.size(); ++k)
      rows.push_back({std::to_string(k + 1), rpls::format_double(diag[k].lambda),
                      std::to_string(diag[k].support), std::to_string(diag[k].iterations),
                      diag[k].converged ? "1" : "0", rpls::format_double(diag[k].objective)});
    auto f = rpls::open_output(opt.report_path);
    rpls::write_csv(f, meta, {"factor", "lambda", "support", "iterations", "converged", "objective"},
                    rows);
    std::cout << "wrote fit report: " << opt.report_path << "\n";
  }

  if (!opt.loadings_path.empty()) {
    const bool with_positions = Q && qop.positions.size() == X.cols();
    std::vector<std::string> cols{"variable"};
    if (with_positions) cols.push_back("position");
    for (int k = 1; k <= mf.model.K(); ++k) cols.push_back("loading_" + std::to_string(k));
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      std::vector<std::string> row{xt.columns[size_t(j)]};
      if (with_positions) row.push_back(rpls::format_double(qop.positions[j]));
      for (int k = 0; k < mf.model.K(); ++k)
        row.push_back(rpls::format_double(mf.model.V(j, k)));
      rows.push_back(std::move(row));
    }
    auto f = rpls::open_output(opt.loadings_path);
    rpls::write_csv(f, meta, cols, rows);
    std::cout << "wrote loadings: " << opt.loadings_path << "\n";
  }

  if (!opt.selection_path.empty()) {
    auto f = rpls::open_output(opt.selection_path);
    rpls::write_csv(f, meta, {"factor", "lambda", "bic", "df", "degenerate"}, selection_rows);
    std::cout << "wrote selection report: " << opt.selection_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string model_path, x_path, output, truth_path;
  std::uint64_t seed = 0;
  int threads = 0;
};

int cmd_predict(const PredictOptions& opt) {
  resolve_threads(opt.threads);
  const rpls::ModelFile mf = rpls::load_model_file(opt.model_path);
  const rpls::CsvTable xt = rpls::read_csv_file(opt.x_path);
  if (xt.values.cols() != mf.model.p())
    throw rpls::DimensionMismatch("predict: model expects " + std::to_string(mf.model.p()) +
                                  " variables, input has " + std::to_string(xt.values.cols()));

  const auto meta = ConfigKeys("predict")
                        .add("mode", mf.has_regression ? "regress" : "classify")
                        .add("factors", mf.model.K())
                        .add("seed", opt.seed)
                        .meta(opt.seed);

  if (mf.has_regression) {
    const Matrix yhat = rpls::predict(mf.regression, mf.model, xt.values);
    std::vector<std::string> cols;
    for (Eigen::Index j = 0; j < yhat.cols(); ++j) cols.push_back("y" + std::to_string(j + 1));
    auto f = rpls::open_output(opt.output);
    rpls::write_csv(f, meta, cols, yhat);
    std::cout << "wrote " << yhat.rows() << " prediction(s): " << opt.output << "\n";
    if (!opt.truth_path.empty()) {
      const rpls::CsvTable truth = rpls::read_csv_file(opt.truth_path);
      std::cout << "mspe: " << rpls::format_double(rpls::mspe(truth.values, yhat)) << "\n";
    }
    return 0;
  }

  if (!mf.has_lda) throw rpls::ConfigError("predict: model has no regression or class block");

  const Matrix Z = rpls::transform(mf.model, xt.values);
  const Matrix scores = rpls::lda_scores(mf.lda, Z);
  const std::vector<int> pred = rpls::lda_predict(mf.lda, Z);
  const auto& classes = mf.lda.classes;

  std::vector<std::string> cols{"label"};
  for (const auto& c : classes) cols.push_back("score_" + rpls::detail_io::escape_label(c));
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    std::vector<std::string> row{rpls::detail_io::escape_label(classes[size_t(pred[size_t(i)])])};
    for (Eigen::Index g = 0; g < scores.cols(); ++g)
      row.push_back(rpls::format_double(scores(i, g)));
    rows.push_back(std::move(row));
  }
  auto f = rpls::open_output(opt.output);
  rpls::write_csv(f, meta, cols, rows);
  std::cout << "wrote " << Z.rows() << " classification(s): " << opt.output << "\n";

  if (!opt.truth_path.empty()) {
    const auto labels = read_labels(opt.truth_path);
    if (Eigen::Index(labels.size()) != Z.rows())
      throw rpls::DimensionMismatch("predict: " + std::to_string(labels.size()) +
                                    " truth labels for " + std::to_string(Z.rows()) + " samples");
    std::map<std::string, int> class_index;
    for (size_t g = 0; g < classes.size(); ++g) class_index[classes[g]] = int(g);
    std::vector<int> truth;
    truth.reserve(labels.size());
    for (const auto& l : labels) {
      const auto it = class_index.find(l);
      if (it == class_index.end())
        throw rpls::ConfigError("predict: truth label '" + l + "' is not a model class");
      truth.push_back(it->second);
    }
    std::cout << "misclassification: "
              << rpls::format_double(rpls::misclassification(truth, pred)) << "\n";

    const size_t G = classes.size();
    std::vector<std::vector<long>> confusion(G, std::vector<long>(G, 0));
    for (size_t i = 0; i < truth.size(); ++i)
      ++confusion[size_t(truth[i])][size_t(pred[i])];
    size_t w = 7;
    for (const auto& c : classes) w = std::max(w, c.size() + 2);
    std::cout << "confusion (rows truth, columns predicted):\n" << std::setw(int(w)) << "";
    for (const auto& c : classes) std::cout << std::setw(int(w)) << c;
    std::cout << "\n";
    for (size_t g = 0; g < G; ++g) {
      std::cout << std::setw(int(w)) << classes[g];
      for (size_t h = 0; h < G; ++h) std::cout << std::setw(int(w)) << confusion[g][h];
      std::cout << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string scenario, out_dir = ".";
  int replicates = -1, grid = -1, folds = -1, threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_simulate(const SimulateOptions& opt) {
  rpls::SimConfig cfg = rpls::scenario_config(opt.scenario);
  if (opt.replicates != -1) {
    if (opt.replicates < 1) throw rpls::ConfigError("simulate: --replicates must be positive");
    cfg.replicates = opt.replicates;
  }
  if (opt.grid != -1) {
    if (opt.grid < 2) throw rpls::ConfigError("simulate: --grid must be at least 2");
    cfg.grid_size = opt.grid;
  }
  if (opt.folds != -1) {
    if (opt.folds < 2) throw rpls::ConfigError("simulate: --folds must be at least 2");
    cfg.cv_folds = opt.folds;
  }
  if (opt.seed_set) cfg.seed = opt.seed;
  cfg.threads = resolve_threads(opt.threads);

  const rpls::ScenarioResult res = rpls::run_scenario(cfg);

  std::filesystem::create_directories(opt.out_dir);
  const std::string base = opt.out_dir + "/" + cfg.scenario;
  const auto meta = ConfigKeys("simulate")
                        .add("scenario", cfg.scenario)
                        .add("n", cfg.n)
                        .add("p", cfg.p)
                        .add("q", cfg.q)
                        .add("p_true", cfg.p_true)
                        .add("snr", cfg.snr)
                        .add("replicates", cfg.replicates)
                        .add("grid", cfg.grid_size)
                        .add("folds", cfg.cv_folds)
                        .add("seed", cfg.seed)
                        .meta(cfg.seed);

  std::vector<std::vector<std::string>> rep_rows;
  for (const auto& m : res.methods)
    for (const auto& r : m.rows)
      rep_rows.push_back({cfg.scenario, m.method, std::to_string(r.replicate),
                          r.ok ? "1" : "0",
                          r.error.empty() ? "-" : rpls::detail_io::escape_label(r.error),
                          rpls::format_double(r.mspe), rpls::format_double(r.tpr),
                          rpls::format_double(r.fpr), std::to_string(r.factors),
                          std::to_string(r.support)});
  {
    auto f = rpls::open_output(base + "_replicates.csv");
    rpls::write_csv(f, meta,
                    {"scenario", "method", "replicate", "ok", "error", "mspe", "tpr", "fpr",
                     "factors", "support"},
                    rep_rows);
  }

  std::vector<std::vector<std::string>> sum_rows;
  for (const auto& m : res.methods)
    sum_rows.push_back({cfg.scenario, m.method, std::to_string(cfg.replicates),
                        std::to_string(m.failed), rpls::format_double(m.mspe_mean),
                        rpls::format_double(m.mspe_sd), rpls::format_double(m.tpr_mean),
                        rpls::format_double(m.tpr_sd), rpls::format_double(m.fpr_mean),
                        rpls::format_double(m.fpr_sd)});
  {
    auto f = rpls::open_output(base + "_summary.csv");
    rpls::write_csv(f, meta,
                    {"scenario", "method", "replicates", "failed", "mspe_mean", "mspe_sd",
                     "tpr_mean", "tpr_sd", "fpr_mean", "fpr_sd"},
                    sum_rows);
  }

  std::cout << "scenario " << cfg.scenario << ": n=" << cfg.n << " p=" << cfg.p << " q=" << cfg.q
            << " p_true=" << cfg.p_true << " snr=" << rpls::format_double(cfg.snr)
            << " replicates=" << cfg.replicates << " seed=" << cfg.seed
            << " threads=" << cfg.threads << "\n";
  std::cout << std::fixed << std::setprecision(3);
  std::cout << std::setw(8) << "method" << std::setw(12) << "mspe" << std::setw(10) << "(sd)"
            << std::setw(8) << "tpr" << std::setw(8) << "fpr" << std::setw(8) << "failed"
            << "\n";
  for (const auto& m : res.methods)
    std::cout << std::setw(8) << m.method << std::setw(12) << m.mspe_mean << std::setw(10)
              << m.mspe_sd << std::setw(8) << m.tpr_mean << std::setw(8) << m.fpr_mean
              << std::setw(8) << m.failed << "\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << "wrote " << base << "_replicates.csv and " << base << "_summary.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// operator

struct OperatorOptions {
  std::string x_path, positions_path, output, report_path;
  double bandwidth = 0;
  bool bandwidth_set = false;
  std::vector<double> bandwidths;
  std::uint64_t seed = 0;
  int threads = 0;
};

int cmd_operator(const OperatorOptions& opt) {
  resolve_threads(opt.threads);
  if (opt.bandwidth_set == !opt.bandwidths.empty())
    throw rpls::ConfigError("operator: exactly one of --bandwidth / --bandwidths is required");

  rpls::CsvTable xt;
  bool have_x = false;
  if (!opt.x_path.empty()) {
    xt = rpls::read_csv_file(opt.x_path);
    have_x = true;
  }

  Vector positions;
  if (!opt.positions_path.empty()) {
    const rpls::CsvTable pt = rpls::read_csv_file(opt.positions_path);
    if (pt.columns.size() != 1)
      throw rpls::ConfigError("operator: positions file must have exactly one column");
    positions = pt.values.col(0);
  } else if (have_x) {
    positions = rpls::positions_from_header(xt.columns);
  } else {
    throw rpls::ConfigError("operator: provide --positions, or --x with numeric column names");
  }

  std::ostringstream blist;
  for (size_t i = 0; i < opt.bandwidths.size(); ++i)
    blist << (i ? "," : "") << rpls::format_double(opt.bandwidths[i]);
  const auto meta = ConfigKeys("operator")
                        .add("variables", positions.size())
                        .add("bandwidth", opt.bandwidth_set ? rpls::format_double(opt.bandwidth)
                                                            : std::string())
                        .add("bandwidths", blist.str())
                        .add("seed", opt.seed)
                        .meta(opt.seed);

  if (opt.bandwidth_set) {
    const rpls::QuadraticOperator op = rpls::epanechnikov_laplacian(positions, opt.bandwidth);
    rpls::save_operator_file(opt.output, op, meta);
    std::cout << "wrote operator (" << op.kind << ", bandwidth "
              << rpls::format_double(op.bandwidth) << ", " << positions.size()
              << " variables): " << opt.output << "\n";
    return 0;
  }

  if (!have_x) throw rpls::ConfigError("operator: bandwidth search needs --x data");
  const rpls::BandwidthSearch search =
      rpls::operator_bandwidth_search(xt.values, positions, opt.bandwidths);
  rpls::save_operator_file(opt.output, search.chosen, meta);

  std::cout << "bandwidth search over " << search.candidates.size() << " candidate(s):\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : search.candidates) {
    std::cout << "  bandwidth " << rpls::format_double(c.bandwidth) << ": "
              << (c.degenerate ? "degenerate (empty graph)"
                               : "explained " + rpls::format_double(c.explained))
              << "\n";
    rows.push_back({rpls::format_double(c.bandwidth), rpls::format_double(c.explained),
                    c.degenerate ? "1" : "0"});
  }
  std::cout << "chosen bandwidth: " << rpls::format_double(search.chosen.bandwidth) << "\n";
  std::cout << "wrote operator: " << opt.output << "\n";
  if (!opt.report_path.empty()) {
    auto f = rpls::open_output(opt.report_path);
    rpls::write_csv(f, meta, {"bandwidth", "explained", "degenerate"}, rows);
    std::cout << "wrote search report: " << opt.report_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularized partial least squares toolkit"};
  app.require_subcommand(1);

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "fit a model from CSV data");
  fit->add_option("--x", fo.x_path, "training predictors CSV")->required();
  auto* fit_y = fit->add_option("--y", fo.y_path, "training responses CSV (regression)");
  fit->add_option("--labels", fo.labels_path, "training class labels CSV (classification)")
      ->excludes(fit_y);
  fit->add_option("-o,--output", fo.output, "model file to write")->required();
  fit->add_option("-k,--factors", fo.factors, "number of factors to extract")->required();
  fit->add_option("--penalty", fo.penalty, "penalty family: none, lasso, group_lasso");
  auto* fit_lambda = fit->add_option("--lambda", fo.lambda, "fixed penalty weight");
  fit->add_flag("--select-lambda", fo.select_lambda, "pick lambda per factor by BIC")
      ->excludes(fit_lambda);
  fit->add_option("--grid", fo.grid, "lambda grid size for --select-lambda (default 25)");
  fit->add_option("--groups", fo.groups_path, "single-column CSV, one group id per variable");
  fit->add_flag("--nonnegative", fo.nonnegative, "constrain loadings to be nonnegative");
  fit->add_flag("--scale-y", fo.scale_y, "standardize responses (default: center only)");
  fit->add_option("--operator", fo.operator_path, "structure operator file to fit against");
  fit->add_option("--report", fo.report_path, "write a per-factor fit report CSV");
  fit->add_option("--loadings", fo.loadings_path, "write a loadings CSV for plotting");
  fit->add_option("--selection-report", fo.selection_path, "write the lambda/BIC path CSV");
  fit->add_option("--seed", fo.seed, "seed recorded in output headers");
  fit->add_option("--threads", fo.threads, "worker threads (0: RPLS_THREADS or 1)");

  PredictOptions po;
  auto* predict = app.add_subcommand("predict", "predict new samples with a fitted model");
  predict->add_option("--model", po.model_path, "model file from fit")->required();
  predict->add_option("--x", po.x_path, "predictors CSV")->required();
  predict->add_option("-o,--output", po.output, "predictions CSV to write")->required();
  predict->add_option("--truth", po.truth_path,
                      "true responses or labels CSV; prints evaluation metrics");
  predict->add_option("--seed", po.seed, "seed recorded in output headers");
  predict->add_option("--threads", po.threads, "worker threads (0: RPLS_THREADS or 1)");

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "run a benchmark scenario");
  simulate->add_option("scenario", so.scenario, "u1 u2 u3 u4 m1 m2 m3 m4 smoke")->required();
  simulate->add_option("--replicates", so.replicates, "override the scenario replicate count");
  simulate->add_option("--seed", so.seed, "base seed (replicates use substreams)");
  simulate->add_option("--grid", so.grid, "override the tuning grid size");
  simulate->add_option("--folds", so.folds, "override the cross-validation fold count");
  simulate->add_option("--threads", so.threads, "worker threads (0: RPLS_THREADS or 1)");
  simulate->add_option("--output-dir", so.out_dir, "directory for the result CSVs");

  OperatorOptions oo;
  auto* op = app.add_subcommand("operator", "build a smoothing operator for structured fits");
  op->add_option("--x", oo.x_path, "data CSV; positions come from its header unless --positions");
  op->add_option("--positions", oo.positions_path, "single-column CSV of variable positions");
  auto* op_bw = op->add_option("--bandwidth", oo.bandwidth, "kernel bandwidth");
  op->add_option("--bandwidths", oo.bandwidths, "comma-separated candidates to search over")
      ->delimiter(',')
      ->excludes(op_bw);
  op->add_option("-o,--output", oo.output, "operator file to write")->required();
  op->add_option("--report", oo.report_path, "write a per-candidate search report CSV");
  op->add_option("--seed", oo.seed, "seed recorded in output headers");
  op->add_option("--threads", oo.threads, "worker threads (0: RPLS_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  so.seed_set = simulate->count("--seed") > 0;
  oo.bandwidth_set = op_bw->count() > 0;

  if (app.got_subcommand(fit)) return run_guarded([&] { return cmd_fit(fo); });
  if (app.got_subcommand(predict)) return run_guarded([&] { return cmd_predict(po); });
  if (app.got_subcommand(simulate)) return run_guarded([&] { return cmd_simulate(so); });
  return run_guarded([&] { return cmd_operator(oo); });
}
