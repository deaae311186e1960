#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "rpls/prediction.hpp"

using rpls::Matrix;
using rpls::PenaltySpec;
using rpls::Vector;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  rpls::Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

PenaltySpec lasso(double l) {
  PenaltySpec s;
  s.family = rpls::PenaltyFamily::lasso;
  s.lambda = l;
  return s;
}

rpls::SolverOptions tight() {
  rpls::SolverOptions o;
  o.tol = 1e-14;
  o.max_iter = 20000;
  return o;
}

}  // namespace

TEST(Regression, ExactFitWhenResponseLiesInFactorSpan) {
  const Matrix X = random_matrix(20, 6, 1);
  rpls::Rng rng(2);
  Vector w(6);
  for (int i = 0; i < 6; ++i) w[i] = rng.normal();
  const Matrix Y = X * w;  // single response, exactly linear
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, 6, PenaltySpec{}, nullptr, tight());
  ASSERT_EQ(model.K(), 6);
  const auto fit = rpls::fit_regression(model, Y);
  const Matrix Yhat = rpls::predict(fit, model, X);
  EXPECT_LT((Yhat - Y).cwiseAbs().maxCoeff(), 1e-8 * Y.cwiseAbs().maxCoeff());
}

TEST(Regression, FullFactorModelMatchesLeastSquares) {
  const Eigen::Index n = 25, p = 6, q = 2;
  const Matrix X = random_matrix(n, p, 3);
  const Matrix Y = random_matrix(n, q, 4);
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, int(p), PenaltySpec{}, nullptr, tight());
  ASSERT_EQ(model.K(), p);
  const auto fit = rpls::fit_regression(model, Y);
  const Matrix Yhat = rpls::predict(fit, model, X);

  // ordinary least squares with intercept, solved directly
  Matrix D(n, p + 1);
  D.col(0).setOnes();
  D.rightCols(p) = X;
  const Matrix beta = (D.transpose() * D).fullPivLu().solve(D.transpose() * Y);
  const Matrix Yls = D * beta;
  EXPECT_LT((Yhat - Yls).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Regression, CoefficientFormEqualsTransformChain) {
  const Matrix X = random_matrix(30, 9, 5);
  const Matrix Y = random_matrix(30, 3, 6);
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, 4, lasso(0.1));
  const auto fit = rpls::fit_regression(model, Y);

  const Matrix Xnew = random_matrix(7, 9, 7);
  const Matrix via_chain = rpls::predict(fit, model, Xnew);
  const Matrix via_coef =
      (Xnew * fit.coefficients).rowwise() + fit.intercept.transpose();
  EXPECT_LT((via_chain - via_coef).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Regression, MeanPointPredictsMeanResponse) {
  const Matrix X = random_matrix(22, 5, 8);
  const Matrix Y = random_matrix(22, 2, 9);
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, 3, lasso(0.05));
  const auto fit = rpls::fit_regression(model, Y);
  Matrix at_mean(1, 5);
  at_mean.row(0) = model.x_stats.mean;
  const Matrix yhat = rpls::predict(fit, model, at_mean);
  EXPECT_LT((yhat.row(0).transpose() - Vector(Y.colwise().mean())).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(Regression, ResidualsOrthogonalToFactors) {
  const Matrix X = random_matrix(28, 8, 10);
  const Matrix Y = random_matrix(28, 2, 11);
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, 4, lasso(0.2));
  const auto fit = rpls::fit_regression(model, Y);
  const Matrix resid = rpls::apply_standardization(Y, model.y_stats) - model.Z * fit.B;
  for (int k = 0; k < model.K(); ++k)
    EXPECT_LT((model.Z.col(k).transpose() * resid).cwiseAbs().maxCoeff(), 1e-10)
        << "factor " << k;
}

TEST(Regression, RejectsBadInput) {
  const Matrix X = random_matrix(15, 4, 12);
  const Matrix Y = random_matrix(15, 2, 13);
  const auto data = rpls::standardize(X, Y);
  const auto model = rpls::fit(data, 2, PenaltySpec{});
  EXPECT_THROW(rpls::fit_regression(model, random_matrix(14, 2, 14)), rpls::DimensionMismatch);
  EXPECT_THROW(rpls::fit_regression(model, random_matrix(15, 3, 15)), rpls::DimensionMismatch);

  // a factor with no scale is refused
  rpls::RplsModel broken = model;
  broken.Z.col(1).setZero();
  EXPECT_THROW(rpls::fit_regression(broken, Y), rpls::SingularFactors);
}

TEST(Classes, EncodingExample) {
  const auto enc = rpls::encode_classes({"A", "A", "B"});
  ASSERT_EQ(enc.classes, (std::vector<std::string>{"A", "B"}));
  ASSERT_EQ(enc.counts, (std::vector<int>{2, 1}));
  Matrix want(3, 2);
  want << 0.5, 0, 0.5, 0, 0, 1;
  EXPECT_LT((enc.Y - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(enc.has_singleton);
  EXPECT_EQ(enc.index, (std::vector<int>{0, 0, 1}));

  const auto balanced = rpls::encode_classes({"x", "y", "x", "y"});
  EXPECT_FALSE(balanced.has_singleton);
  EXPECT_THROW(rpls::encode_classes({}), rpls::EmptyInput);
  EXPECT_THROW(rpls::encode_classes({"only", "only"}), rpls::SingletonOrEmptyClass);
}

TEST(Classes, LabelOrderIsSortedNotFirstSeen) {
  const auto enc = rpls::encode_classes({"zebra", "apple", "zebra", "apple"});
  EXPECT_EQ(enc.classes, (std::vector<std::string>{"apple", "zebra"}));
  EXPECT_EQ(enc.index, (std::vector<int>{1, 0, 1, 0}));
}

TEST(Lda, MidpointDecisionRule) {
  Matrix Z(6, 1);
  Z << 1, 2, 3, 5, 6, 7;
  const auto enc = rpls::encode_classes({"a", "a", "a", "b", "b", "b"});
  const auto m = rpls::lda_fit(Z, enc);
  Matrix probe(2, 1);
  probe << 3.9, 4.1;  // class means 2 and 6, equal priors: boundary at 4
  const auto pred = rpls::lda_predict(m, probe);
  EXPECT_EQ(pred[0], 0);
  EXPECT_EQ(pred[1], 1);
}

TEST(Lda, TrainingMeansClassifyToOwnClass) {
  const Matrix Z = random_matrix(30, 3, 20);
  std::vector<std::string> labels;
  Matrix Zs = Z;
  for (int i = 0; i < 30; ++i) {
    const int g = i / 10;
    labels.push_back(std::string(1, char('a' + g)));
    Zs.row(i) += Vector::Constant(3, 4.0 * g).transpose();  // separate the classes
  }
  const auto enc = rpls::encode_classes(labels);
  const auto m = rpls::lda_fit(Zs, enc);
  const auto pred = rpls::lda_predict(m, m.means);
  for (int g = 0; g < 3; ++g) EXPECT_EQ(pred[size_t(g)], g);
}

TEST(Lda, MatchesDirectScoreFormula) {
  const Eigen::Index n = 30, K = 3;
  Matrix Z = random_matrix(n, K, 21);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    const int g = i % 3;
    labels.push_back(std::string(1, char('p' + g)));
    Z(i, 0) += 2.5 * g;
  }
  const auto enc = rpls::encode_classes(labels);
  const auto m = rpls::lda_fit(Z, enc);

  // independent pooled covariance with the same ridge rule
  std::vector<Vector> means(3, Vector::Zero(K));
  std::vector<double> priors(3);
  for (int i = 0; i < n; ++i) means[size_t(i % 3)] += Z.row(i).transpose();
  for (int g = 0; g < 3; ++g) {
    means[size_t(g)] /= 10.0;
    priors[size_t(g)] = 10.0 / double(n);
  }
  Matrix sigma = Matrix::Zero(K, K);
  for (int i = 0; i < n; ++i) {
    const Vector d = Z.row(i).transpose() - means[size_t(i % 3)];
    sigma += d * d.transpose();
  }
  sigma /= double(n - 3);
  sigma += 1e-8 * sigma.trace() / double(K) * Matrix::Identity(K, K);

  const Matrix probes = random_matrix(40, K, 22);
  const auto pred = rpls::lda_predict(m, probes);
  for (int i = 0; i < 40; ++i)
    EXPECT_EQ(pred[size_t(i)],
              int(oracle::lda_argmax(probes.row(i).transpose(), means, sigma, priors)))
        << "probe " << i;
}

TEST(Lda, SampleOrderDoesNotMatter) {
  const Eigen::Index n = 24;
  Matrix Z = random_matrix(n, 2, 23);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    labels.push_back(i % 2 ? "pos" : "neg");
    Z(i, 0) += i % 2 ? 3.0 : 0.0;
  }
  const auto m1 = rpls::lda_fit(Z, rpls::encode_classes(labels));

  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[size_t(i)] = i;
  rpls::Rng rng(24);
  rng.shuffle(perm.begin(), perm.end());
  Matrix Zp(n, 2);
  std::vector<std::string> lp;
  for (int i = 0; i < n; ++i) {
    Zp.row(i) = Z.row(perm[size_t(i)]);
    lp.push_back(labels[size_t(perm[size_t(i)])]);
  }
  const auto m2 = rpls::lda_fit(Zp, rpls::encode_classes(lp));
  EXPECT_LT((m1.means - m2.means).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m1.sigma_inv - m2.sigma_inv).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Lda, TiesResolveToLowerIndex) {
  // identical class means and equal priors: every score ties, class 0 wins
  Matrix Z(6, 1);
  Z << 1, 1, 2, 2, 3, 3;
  const auto enc = rpls::encode_classes({"a", "b", "a", "b", "a", "b"});
  const auto m = rpls::lda_fit(Z, enc);
  const auto pred = rpls::lda_predict(m, random_matrix(5, 1, 25));
  for (int p : pred) EXPECT_EQ(p, 0);
}

TEST(Lda, DegenerateInputsThrow) {
  Matrix Z(4, 1);
  Z << 1, 2, 3, 4;
  EXPECT_THROW(rpls::lda_fit(Z, rpls::encode_classes({"a", "a", "a", "b"})),
               rpls::SingletonOrEmptyClass);

  // constant scores leave no within-class scatter to pool
  Matrix Zconst = Matrix::Zero(6, 1);
  EXPECT_THROW(rpls::lda_fit(Zconst, rpls::encode_classes({"a", "a", "a", "b", "b", "b"})),
               rpls::SingularCovariance);

  EXPECT_THROW(rpls::lda_fit(Z, rpls::encode_classes({"a", "a", "b", "b", "b"})),
               rpls::DimensionMismatch);
}

TEST(Metrics, SquaredErrorExamples) {
  Matrix Y(3, 1), Yhat(3, 1);
  Y << 0, 0, 0;
  Yhat << 1, 1, 0;
  EXPECT_NEAR(rpls::mspe(Y, Yhat), 2.0 / 3.0, 1e-15);

  Matrix A(2, 2), B(2, 2);
  A << 1, 2, 3, 4;
  B << 1, 2, 3, 4;
  EXPECT_EQ(rpls::mspe(A, B), 0.0);
  B(1, 1) = 6.0;  // one row picks up squared error 4
  EXPECT_NEAR(rpls::mspe(A, B), 2.0, 1e-15);

  EXPECT_THROW(rpls::mspe(A, Matrix::Zero(3, 2)), rpls::DimensionMismatch);
  EXPECT_THROW(rpls::mspe(Matrix(0, 1), Matrix(0, 1)), rpls::EmptyInput);
}

TEST(Metrics, MisclassificationExamples) {
  EXPECT_NEAR(rpls::misclassification({0, 1, 1}, {0, 1, 0}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(rpls::misclassification({2, 2}, {2, 2}), 0.0);
  EXPECT_THROW(rpls::misclassification({0}, {0, 1}), rpls::DimensionMismatch);
  EXPECT_THROW(rpls::misclassification({}, {}), rpls::EmptyInput);
}

TEST(Metrics, SupportRates) {
  const auto r = rpls::support_rates({0, 1, 5}, {0, 1, 2}, 10);
  EXPECT_NEAR(r.tpr, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.fpr, 1.0 / 7.0, 1e-15);

  const auto none_true = rpls::support_rates({0, 1}, {}, 5);
  EXPECT_EQ(none_true.tpr, 0.0);
  EXPECT_NEAR(none_true.fpr, 2.0 / 5.0, 1e-15);

  std::vector<int> all(8);
  for (int i = 0; i < 8; ++i) all[size_t(i)] = i;
  const auto all_true = rpls::support_rates(all, all, 8);
  EXPECT_EQ(all_true.tpr, 1.0);
  EXPECT_EQ(all_true.fpr, 0.0);  // nothing spurious is possible

  EXPECT_THROW(rpls::support_rates({9}, {0}, 5), rpls::BadRange);
}
