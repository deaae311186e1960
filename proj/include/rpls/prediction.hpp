#pragma once

// Downstream use of a fitted model: least-squares regression on the
// orthogonal factors (with coefficients mapped back to the original data
// scale), class-coded discriminant classification on the factor scores, and
// the evaluation metrics shared by the tools.

#include <string>
#include <vector>

#include "rpls/pipeline.hpp"

namespace rpls {

struct RegressionFit {
  Matrix B;             // K×q factor-space coefficients
  Matrix coefficients;  // p×q on the original data scale
  Vector intercept;     // q
};

// Per-factor least squares: the training factors are orthogonal, so each
// coefficient is a scaled projection. Y is standardized with the model's
// stored statistics before projection and the coefficients are unwound to
// raw units afterwards.
inline RegressionFit fit_regression(const RplsModel& model, const Matrix& Y_raw) {
  if (Y_raw.rows() != model.Z.rows()) throw DimensionMismatch("fit_regression: row counts");
  if (Y_raw.cols() != model.y_stats.mean.size())
    throw DimensionMismatch("fit_regression: response columns");
  check_finite(Y_raw, "fit_regression");
  const Matrix Ys = apply_standardization(Y_raw, model.y_stats);
  const int K = model.K();
  const Eigen::Index q = Ys.cols(), p = model.p();

  RegressionFit fit;
  fit.B.resize(K, q);
  for (int k = 0; k < K; ++k) {
    const double zk2 = model.Z.col(k).squaredNorm();
    if (zk2 <= 1e-14 * double(model.Z.rows()))
      throw SingularFactors("fit_regression: factor " + std::to_string(k) + " has no scale");
    fit.B.row(k) = model.Z.col(k).transpose() * Ys / zk2;
  }

  const Matrix WB = model.W * fit.B;
  fit.coefficients.resize(p, q);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      fit.coefficients(i, j) = WB(i, j) * model.y_stats.scale[j] / model.x_stats.scale[i];
  fit.intercept = model.y_stats.mean -
                  fit.coefficients.transpose() * model.x_stats.mean;
  return fit;
}

inline Matrix predict(const RegressionFit& fit, const RplsModel& model, const Matrix& X_new) {
  return invert_standardization(transform(model, X_new) * fit.B, model.y_stats);
}

struct ClassEncoding {
  Matrix Y;                          // n×G, 1/n_g in the sample's class column
  std::vector<std::string> classes;  // sorted unique labels
  std::vector<int> counts;           // per class
  std::vector<int> index;            // per sample
  bool has_singleton = false;
};

inline ClassEncoding encode_classes(const std::vector<std::string>& labels) {
  if (labels.empty()) throw EmptyInput("encode_classes: no labels");
  ClassEncoding enc;
  enc.classes = labels;
  std::sort(enc.classes.begin(), enc.classes.end());
  enc.classes.erase(std::unique(enc.classes.begin(), enc.classes.end()), enc.classes.end());
  const int G = int(enc.classes.size());
  if (G < 2) throw SingletonOrEmptyClass("encode_classes: need at least two classes");
  enc.counts.assign(size_t(G), 0);
  enc.index.reserve(labels.size());
  for (const auto& l : labels) {
    const int g = int(std::lower_bound(enc.classes.begin(), enc.classes.end(), l) -
                      enc.classes.begin());
    enc.index.push_back(g);
    ++enc.counts[size_t(g)];
  }
  for (int c : enc.counts) enc.has_singleton = enc.has_singleton || c < 2;
  enc.Y = Matrix::Zero(Eigen::Index(labels.size()), G);
  for (size_t i = 0; i < labels.size(); ++i)
    enc.Y(Eigen::Index(i), enc.index[i]) = 1.0 / double(enc.counts[size_t(enc.index[i])]);
  return enc;
}

struct LdaModel {
  Matrix means;      // G×K class means in factor space
  Matrix sigma_inv;  // ridged pooled within-class covariance, inverted
  Vector log_prior;  // empirical class frequencies
  std::vector<std::string> classes;
};

inline LdaModel lda_fit(const Matrix& Z, const ClassEncoding& enc) {
  const Eigen::Index n = Z.rows(), K = Z.cols();
  if (size_t(n) != enc.index.size()) throw DimensionMismatch("lda_fit: row counts");
  const int G = int(enc.classes.size());
  for (int c : enc.counts)
    if (c < 2) throw SingletonOrEmptyClass("lda_fit: every class needs two samples");
  if (n <= G) throw TooFewSamples("lda_fit: pooled covariance needs n > G");

  LdaModel m;
  m.classes = enc.classes;
  m.means = Matrix::Zero(G, K);
  for (Eigen::Index i = 0; i < n; ++i) m.means.row(enc.index[size_t(i)]) += Z.row(i);
  for (int g = 0; g < G; ++g) m.means.row(g) /= double(enc.counts[size_t(g)]);

  Matrix sigma = Matrix::Zero(K, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector d = Z.row(i).transpose() - m.means.row(enc.index[size_t(i)]).transpose();
    sigma += d * d.transpose();
  }
  sigma /= double(n - G);
  const double ridge = 1e-8 * sigma.trace() / double(K);
  if (!(ridge > 0)) throw SingularCovariance("lda_fit: zero within-class scatter");
  sigma += ridge * Matrix::Identity(K, K);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw SingularCovariance("lda_fit: pooled covariance not positive definite");
  m.sigma_inv = llt.solve(Matrix::Identity(K, K));

  m.log_prior.resize(G);
  for (int g = 0; g < G; ++g) m.log_prior[g] = std::log(double(enc.counts[size_t(g)]) / double(n));
  return m;
}

// linear discriminant scores; ties resolve to the lower class index
inline Matrix lda_scores(const LdaModel& m, const Matrix& Z) {
  if (Z.cols() != m.means.cols()) throw DimensionMismatch("lda_scores: factor count");
  const int G = int(m.means.rows());
  Matrix scores(Z.rows(), G);
  for (int g = 0; g < G; ++g) {
    const Vector a = m.sigma_inv * m.means.row(g).transpose();
    const double c = -0.5 * m.means.row(g).dot(a) + m.log_prior[g];
    scores.col(g) = (Z * a).array() + c;
  }
  return scores;
}

inline std::vector<int> lda_predict(const LdaModel& m, const Matrix& Z) {
  const Matrix scores = lda_scores(m, Z);
  std::vector<int> out(size_t(Z.rows()));
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    int best = 0;
    for (int g = 1; g < scores.cols(); ++g)
      if (scores(i, g) > scores(i, best)) best = g;
    out[size_t(i)] = best;
  }
  return out;
}

// mean over samples of the squared response-vector error
inline double mspe(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw DimensionMismatch("mspe: shapes");
  if (Y.rows() == 0) throw EmptyInput("mspe");
  return (Y - Yhat).rowwise().squaredNorm().mean();
}

inline double misclassification(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size()) throw DimensionMismatch("misclassification: lengths");
  if (truth.empty()) throw EmptyInput("misclassification");
  int wrong = 0;
  for (size_t i = 0; i < truth.size(); ++i) wrong += truth[i] != pred[i];
  return double(wrong) / double(truth.size());
}

struct SupportRates {
  double tpr = 0;  // found / planted, 0 when nothing is planted
  double fpr = 0;  // spurious / plantable complement, 0 when everything is planted
};

inline SupportRates support_rates(const std::vector<int>& selected,
                                  const std::vector<int>& truth, int p) {
  std::vector<char> sel(size_t(p), 0), tru(size_t(p), 0);
  for (int j : selected) {
    if (j < 0 || j >= p) throw BadRange("support_rates: selected index");
    sel[size_t(j)] = 1;
  }
  for (int j : truth) {
    if (j < 0 || j >= p) throw BadRange("support_rates: truth index");
    tru[size_t(j)] = 1;
  }
  int tp = 0, fp = 0, nt = 0;
  for (int j = 0; j < p; ++j) {
    nt += tru[size_t(j)];
    if (sel[size_t(j)] && tru[size_t(j)]) ++tp;
    if (sel[size_t(j)] && !tru[size_t(j)]) ++fp;
  }
  SupportRates r;
  r.tpr = nt > 0 ? double(tp) / double(nt) : 0.0;
  r.fpr = p - nt > 0 ? double(fp) / double(p - nt) : 0.0;
  return r;
}

}  // namespace rpls
