// End-to-end tests of the command line tool: each case runs the real binary
// in a scratch directory and checks files, stdout, and exit codes.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rpls/rpls.hpp"

namespace fs = std::filesystem;
using rpls::Matrix;
using rpls::Vector;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(::testing::TempDir()) /
           ("rpls_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void TearDown() override { fs::remove_all(dir_); }

  // Runs the tool with stderr folded into the captured output.
  int run_cli(const std::string& args, std::string* output = nullptr) {
    const fs::path captured = dir_ / "_stdout.txt";
    const std::string cmd =
        std::string("'") + RPLS_CLI_PATH + "' " + args + " > " + q(captured) + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(captured);
    return (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  }

  fs::path write_matrix_csv(const std::string& name, const Matrix& m,
                            const std::string& col_prefix) {
    std::vector<std::string> cols;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      cols.push_back(col_prefix + std::to_string(j + 1));
    const fs::path path = dir_ / name;
    auto f = rpls::open_output(path.string());
    rpls::write_csv(f, rpls::OutputMeta{}, cols, m);
    return path;
  }

  fs::path write_labels_csv(const std::string& name, const std::vector<std::string>& labels) {
    const fs::path path = dir_ / name;
    std::ofstream f(path);
    f << "label\n";
    for (const auto& l : labels) f << l << "\n";
    return path;
  }

  // Small dense regression problem with an exactly reproducible X and Y.
  void make_regression_data(int n = 24, int p = 5, int nq = 2) {
    rpls::Rng rng(42);
    X_.resize(n, p);
    for (Eigen::Index i = 0; i < X_.rows(); ++i)
      for (Eigen::Index j = 0; j < X_.cols(); ++j) X_(i, j) = rng.normal();
    Matrix B = Matrix::Zero(p, nq);
    B(0, 0) = 2.0;
    B(1, 0) = -1.0;
    B(2, nq - 1) = 1.5;
    Y_ = X_ * B;
    for (Eigen::Index i = 0; i < Y_.rows(); ++i)
      for (Eigen::Index j = 0; j < Y_.cols(); ++j) Y_(i, j) += rng.normal(0.0, 0.1);
    x_csv_ = write_matrix_csv("x.csv", X_, "x");
    y_csv_ = write_matrix_csv("y.csv", Y_, "y");
  }

  fs::path dir_;
  Matrix X_, Y_;
  fs::path x_csv_, y_csv_;
};

TEST_F(CliTest, FitPredictRoundTripReproducesFittedValues) {
  make_regression_data();
  const fs::path model = dir_ / "model.txt";
  const fs::path pred = dir_ / "pred.csv";

  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(model) +
                       " -k 3 --penalty lasso --lambda 0.01"));
  std::string out;
  ASSERT_EQ(0, run_cli("predict --model " + q(model) + " --x " + q(x_csv_) + " -o " + q(pred) +
                           " --truth " + q(y_csv_),
                       &out));
  EXPECT_NE(out.find("mspe:"), std::string::npos);

  const rpls::ModelFile mf = rpls::load_model_file(model.string());
  ASSERT_TRUE(mf.has_regression);
  const Matrix expected = rpls::predict(mf.regression, mf.model, X_);

  const rpls::CsvTable table = rpls::read_csv_file(pred.string());
  ASSERT_EQ(table.values.rows(), expected.rows());
  ASSERT_EQ(table.values.cols(), expected.cols());
  ASSERT_EQ(table.columns[0], "y1");
  for (Eigen::Index i = 0; i < expected.rows(); ++i)
    for (Eigen::Index j = 0; j < expected.cols(); ++j)
      EXPECT_EQ(table.values(i, j), expected(i, j)) << i << "," << j;
}

TEST_F(CliTest, UnpenalizedFitMatchesFactorizationOracle) {
  make_regression_data(20, 4, 2);
  const fs::path model = dir_ / "model.txt";
  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(model) + " -k 2"));

  const rpls::ModelFile mf = rpls::load_model_file(model.string());
  const auto data = rpls::standardize(X_, Y_, true, false);
  const auto ref = oracle::simpls_reference(data.X, data.Y, 2);

  ASSERT_EQ(mf.model.K(), 2);
  for (int k = 0; k < 2; ++k) {
    const double sign = mf.model.V.col(k).dot(ref.V.col(k)) < 0 ? -1.0 : 1.0;
    EXPECT_LT((sign * mf.model.V.col(k) - ref.V.col(k)).cwiseAbs().maxCoeff(), 1e-8) << k;
  }
}

TEST_F(CliTest, ExitCodesSeparateValidationFromNumericFailures) {
  make_regression_data();
  const fs::path model = dir_ / "model.txt";
  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(model) + " -k 2"));

  // validation failures: exit 2
  EXPECT_EQ(2, run_cli("simulate nosuch --output-dir " + q(dir_)));
  EXPECT_EQ(2, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(dir_ / "m") +
                       " -k 99"));
  EXPECT_EQ(2, run_cli("fit --x " + q(dir_ / "missing.csv") + " --y " + q(y_csv_) + " -o " +
                       q(dir_ / "m") + " -k 2"));
  EXPECT_EQ(2, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(dir_ / "m") +
                       " -k 2 --lambda 0.1 --select-lambda"));
  EXPECT_EQ(2, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " --labels " + q(y_csv_) +
                       " -o " + q(dir_ / "m") + " -k 2"));
  const fs::path narrow = write_matrix_csv("narrow.csv", Matrix::Ones(4, 2), "x");
  EXPECT_EQ(2, run_cli("predict --model " + q(model) + " --x " + q(narrow) + " -o " +
                       q(dir_ / "p.csv")));
  EXPECT_EQ(2, run_cli("operator --positions " + q(x_csv_) + " --bandwidth 0.5 -o " +
                       q(dir_ / "op.txt")));  // multi-column positions file

  // numeric failures: exit 3
  Matrix yconst = Matrix::Constant(X_.rows(), 1, 5.0);
  const fs::path yc = write_matrix_csv("yconst.csv", yconst, "y");
  std::string out;
  EXPECT_EQ(3, run_cli("fit --x " + q(x_csv_) + " --y " + q(yc) + " -o " + q(dir_ / "m") + " -k 2",
                       &out));
  EXPECT_NE(out.find("error:"), std::string::npos);

  rpls::QuadraticOperator indefinite;
  indefinite.Q = Matrix::Identity(X_.cols(), X_.cols());
  indefinite.Q(0, 0) = -4.0;
  indefinite.kind = "laplacian";
  indefinite.bandwidth = 0.5;
  const fs::path bad_op = dir_ / "bad_op.txt";
  rpls::save_operator_file(bad_op.string(), indefinite, rpls::OutputMeta{});
  EXPECT_EQ(3, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(dir_ / "m") +
                       " -k 2 --operator " + q(bad_op)));
}

TEST_F(CliTest, ModelFormatVersionIsChecked) {
  make_regression_data();
  const fs::path model = dir_ / "model.txt";
  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(model) + " -k 2"));

  std::string text = slurp(model);
  const std::string tag = "rpls-model/1";
  text.replace(text.find(tag), tag.size(), "rpls-model/2");
  const fs::path future = dir_ / "future.txt";
  std::ofstream(future) << text;

  std::string out;
  EXPECT_EQ(2, run_cli("predict --model " + q(future) + " --x " + q(x_csv_) + " -o " +
                           q(dir_ / "p.csv"),
                       &out));
  EXPECT_NE(out.find("format mismatch"), std::string::npos);

  // an operator file is not a model either
  const fs::path pos = write_matrix_csv("pos.csv", Vector::LinSpaced(5, 0.0, 1.0), "p");
  // single-column file named by value, not prefix: rewrite with one header
  {
    std::ofstream f(pos);
    f << "position\n";
    for (int j = 0; j < 5; ++j) f << rpls::format_double(0.25 * j) << "\n";
  }
  const fs::path op = dir_ / "op.txt";
  ASSERT_EQ(0, run_cli("operator --positions " + q(pos) + " --bandwidth 0.6 -o " + q(op)));
  EXPECT_EQ(2, run_cli("predict --model " + q(op) + " --x " + q(x_csv_) + " -o " +
                       q(dir_ / "p.csv")));
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  make_regression_data();
  const std::string fit_args = "fit --x " + q(x_csv_) + " --y " + q(y_csv_) +
                               " -k 3 --penalty lasso --select-lambda --seed 7 -o ";
  ASSERT_EQ(0, run_cli(fit_args + q(dir_ / "m1.txt")));
  ASSERT_EQ(0, run_cli(fit_args + q(dir_ / "m2.txt")));
  EXPECT_EQ(slurp(dir_ / "m1.txt"), slurp(dir_ / "m2.txt"));

  const std::string predict_args =
      "predict --model " + q(dir_ / "m1.txt") + " --x " + q(x_csv_) + " -o ";
  ASSERT_EQ(0, run_cli(predict_args + q(dir_ / "p1.csv")));
  ASSERT_EQ(0, run_cli(predict_args + q(dir_ / "p2.csv")));
  EXPECT_EQ(slurp(dir_ / "p1.csv"), slurp(dir_ / "p2.csv"));

  const std::string header = slurp(dir_ / "m1.txt");
  EXPECT_NE(header.find("# version: 0.1.0"), std::string::npos);
  EXPECT_NE(header.find("# seed: 7"), std::string::npos);
  EXPECT_NE(header.find("# config: "), std::string::npos);
}

TEST_F(CliTest, SimulateSmokeIsThreadInvariantAndCounted) {
  std::string out;
  ASSERT_EQ(0, run_cli("simulate smoke --replicates 2 --seed 5 --threads 1 --output-dir " +
                           q(dir_ / "a"),
                       &out));
  EXPECT_NE(out.find("scenario smoke"), std::string::npos);
  ASSERT_EQ(0, run_cli("simulate smoke --replicates 2 --seed 5 --threads 2 --output-dir " +
                       q(dir_ / "b")));
  EXPECT_EQ(slurp(dir_ / "a/smoke_replicates.csv"), slurp(dir_ / "b/smoke_replicates.csv"));
  EXPECT_EQ(slurp(dir_ / "a/smoke_summary.csv"), slurp(dir_ / "b/smoke_summary.csv"));

  const rpls::TextTable summary =
      rpls::read_csv_text_file((dir_ / "a/smoke_summary.csv").string());
  ASSERT_EQ(summary.columns[0], "scenario");
  ASSERT_EQ(summary.columns[3], "failed");
  ASSERT_EQ(summary.rows.size(), 3u);  // rpls, pls, lasso
  for (const auto& row : summary.rows) EXPECT_EQ(row[3], "0");

  const rpls::TextTable reps =
      rpls::read_csv_text_file((dir_ / "a/smoke_replicates.csv").string());
  EXPECT_EQ(reps.rows.size(), 6u);  // 3 methods x 2 replicates
  EXPECT_NE(slurp(dir_ / "a/smoke_summary.csv").find("# seed: 5"), std::string::npos);
}

TEST_F(CliTest, ClassificationRoundTripWithConfusion) {
  const int n = 20, p = 4;
  rpls::Rng rng(3);
  Matrix X(n, p);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    const bool hi = i % 2 == 0;
    labels.push_back(hi ? "hi" : "lo");
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal() + (hi && j < 2 ? 4.0 : 0.0);
  }
  const fs::path x = write_matrix_csv("x.csv", X, "x");
  const fs::path lab = write_labels_csv("labels.csv", labels);
  const fs::path model = dir_ / "cmodel.txt";
  const fs::path pred = dir_ / "cpred.csv";

  ASSERT_EQ(0, run_cli("fit --x " + q(x) + " --labels " + q(lab) + " -o " + q(model) + " -k 2"));
  std::string out;
  ASSERT_EQ(0, run_cli("predict --model " + q(model) + " --x " + q(x) + " -o " + q(pred) +
                           " --truth " + q(lab),
                       &out));
  EXPECT_NE(out.find("misclassification: 0"), std::string::npos);
  EXPECT_NE(out.find("confusion"), std::string::npos);

  const rpls::TextTable table = rpls::read_csv_text_file(pred.string());
  ASSERT_EQ(table.columns.size(), 3u);  // label + one score per class
  EXPECT_EQ(table.columns[0], "label");
  EXPECT_EQ(table.columns[1], "score_hi");
  EXPECT_EQ(table.columns[2], "score_lo");
  ASSERT_EQ(table.rows.size(), size_t(n));
  for (size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(table.rows[i][0], labels[i]);
}

TEST_F(CliTest, OperatorSearchFeedsStructuredFit) {
  make_regression_data(30, 6, 1);
  const fs::path pos = dir_ / "pos.csv";
  {
    std::ofstream f(pos);
    f << "position\n";
    for (int j = 0; j < 6; ++j) f << rpls::format_double(0.1 * j) << "\n";
  }
  const fs::path op = dir_ / "op.txt";
  const fs::path report = dir_ / "search.csv";
  std::string out;
  ASSERT_EQ(0, run_cli("operator --x " + q(x_csv_) + " --positions " + q(pos) +
                           " --bandwidths 0.15,0.25,0.5 -o " + q(op) + " --report " + q(report),
                       &out));
  EXPECT_NE(out.find("chosen bandwidth:"), std::string::npos);

  const rpls::TextTable table = rpls::read_csv_text_file(report.string());
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.columns[0], "bandwidth");

  const rpls::QuadraticOperator loaded = rpls::load_operator_file(op.string());
  EXPECT_EQ(loaded.kind, "laplacian");
  EXPECT_EQ(loaded.Q.rows(), 6);

  const fs::path loadings = dir_ / "loadings.csv";
  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(dir_ / "sm.txt") +
                       " -k 2 --operator " + q(op) + " --loadings " + q(loadings)));
  const rpls::TextTable ltab = rpls::read_csv_text_file(loadings.string());
  ASSERT_GE(ltab.columns.size(), 4u);  // variable, position, loading_1, loading_2
  EXPECT_EQ(ltab.columns[1], "position");
  EXPECT_EQ(ltab.rows.size(), 6u);
}

TEST_F(CliTest, SelectionReportListsTheWholeGrid) {
  make_regression_data(24, 5, 3);
  const fs::path sel = dir_ / "sel.csv";
  ASSERT_EQ(0, run_cli("fit --x " + q(x_csv_) + " --y " + q(y_csv_) + " -o " + q(dir_ / "m.txt") +
                       " -k 2 --penalty lasso --select-lambda --grid 10 --selection-report " +
                       q(sel)));
  const rpls::TextTable table = rpls::read_csv_text_file(sel.string());
  ASSERT_EQ(table.columns.size(), 5u);
  EXPECT_EQ(table.columns[0], "factor");
  EXPECT_EQ(table.columns[2], "bic");
  EXPECT_EQ(table.rows.size(), 20u);  // 2 factors x 10 grid points
  EXPECT_EQ(table.rows[0][0], "1");
  EXPECT_EQ(table.rows[10][0], "2");
}

}  // namespace
