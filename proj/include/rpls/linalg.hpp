#pragma once

#include <cmath>

#include "rpls/standardize.hpp"
#include "rpls/types.hpp"

namespace rpls {

struct CrossProduct {
  Matrix M;       // p×q
  int level = 0;  // deflation count
};

inline CrossProduct cross_product(const StandardizedData& d) {
  return {d.X.transpose() * d.Y, 0};
}

// √(v'Qv); Q = nullptr means identity. Tiny negative quadratic forms from
// roundoff are clamped, genuinely negative ones signal a non-PSD Q.
inline double q_norm(const Vector& v, const Matrix* Q = nullptr) {
  if (Q == nullptr) return v.norm();
  if (Q->rows() != v.size() || Q->cols() != v.size())
    throw DimensionMismatch("q_norm: operator size");
  double s = v.dot(*Q * v);
  if (s < -1e-10) throw NegativeQuadraticForm("q_norm: v'Qv = " + std::to_string(s));
  if (s < 0) s = 0;
  return std::sqrt(s);
}

// Gram-Schmidt projection state: weight columns R plus the inverse of R'QR,
// extended one factor at a time through the Schur complement so no refactoring
// happens on the hot path. append_refactored() rebuilds from scratch and is the
// debug/reference path.
class ProjectionState {
 public:
  int k() const { return int(R_.cols()); }
  const Matrix& R() const { return R_; }
  const Matrix& QR() const { return QR_; }  // Q*R (equals R when unstructured)
  const Matrix& gram_inverse() const { return Ginv_; }

  void append(const Vector& r, const Matrix* Q = nullptr) {
    const Vector qr = Q ? Vector(*Q * r) : r;
    const double c = r.dot(qr);
    if (k() == 0) {
      if (c <= 1e-14) throw DegenerateFactor("projection: r'Qr ~ 0");
      R_ = r;
      QR_ = qr;
      Ginv_ = Matrix::Constant(1, 1, 1.0 / c);
      gram_ = Matrix::Constant(1, 1, c);
      return;
    }
    const Vector b = QR_.transpose() * r;  // R'Q r
    const Vector gb = Ginv_ * b;
    const double schur = c - b.dot(gb);
    // Schur complement ~ 0 or negative means the new weight is numerically in
    // the span of the previous ones.
    if (schur <= 1e-14 * std::max(1.0, c)) throw DegenerateFactor("projection: singular Gram");
    check_condition(schur);
    const int m = k();
    Matrix Ginv(m + 1, m + 1);
    Ginv.topLeftCorner(m, m) = Ginv_ + gb * gb.transpose() / schur;
    Ginv.topRightCorner(m, 1) = -gb / schur;
    Ginv.bottomLeftCorner(1, m) = -gb.transpose() / schur;
    Ginv(m, m) = 1.0 / schur;
    Matrix G(m + 1, m + 1);
    G.topLeftCorner(m, m) = gram_;
    G.topRightCorner(m, 1) = b;
    G.bottomLeftCorner(1, m) = b.transpose();
    G(m, m) = c;
    gram_ = std::move(G);
    Ginv_ = std::move(Ginv);
    R_.conservativeResize(Eigen::NoChange, m + 1);
    R_.col(m) = r;
    QR_.conservativeResize(Eigen::NoChange, m + 1);
    QR_.col(m) = qr;
  }

  // reference path: rebuild R'QR and invert it directly
  void append_refactored(const Vector& r, const Matrix* Q = nullptr) {
    const int m = k();
    Matrix R(r.size(), m + 1);
    if (m > 0) R.leftCols(m) = R_;
    R.col(m) = r;
    const Matrix QR = Q ? Matrix(*Q * R) : R;
    const Matrix G = R.transpose() * QR;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff()))
      throw DegenerateFactor("projection: singular Gram");
    R_ = R;
    QR_ = QR;
    gram_ = G;
    Ginv_ = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
  }

 private:
  void check_condition(double schur) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram_);
    const double lo = std::min(es.eigenvalues().minCoeff(), schur);
    const double hi = std::max(es.eigenvalues().maxCoeff(), schur);
    if (lo <= 0 || hi / lo > 1e12) throw DegenerateFactor("projection: Gram condition > 1e12");
  }

  Matrix R_;
  Matrix QR_;
  Matrix gram_;
  Matrix Ginv_;
};

// M̂ ← (I − R(R'QR)⁻¹R'Q) M̂. Guarantees R'Q M̂ = 0; reduces to the plain
// Gram-Schmidt projector when Q is the identity.
inline CrossProduct project_out(const CrossProduct& cp, const ProjectionState& s,
                                const Matrix* /*Q*/ = nullptr) {
  if (s.k() == 0) return cp;
  if (s.R().rows() != cp.M.rows()) throw DimensionMismatch("project_out: row count");
  CrossProduct out;
  out.M = cp.M - s.R() * (s.gram_inverse() * (s.QR().transpose() * cp.M));
  out.level = cp.level + 1;
  return out;
}

}  // namespace rpls
