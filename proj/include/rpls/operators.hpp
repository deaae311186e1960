#pragma once

// Quadratic operators Q ⪰ 0 encoding variable structure, built as
// kernel-weighted graph Laplacians over variable positions, plus validation
// for user-supplied matrices.

#include <string>
#include <vector>

#include "rpls/solver.hpp"
#include "rpls/types.hpp"

namespace rpls {

struct QuadraticOperator {
  Matrix Q;
  std::string kind;  // "laplacian", "custom", "identity"
  Vector positions;  // empty unless kernel-built
  double bandwidth = 0;
  bool is_identity = false;
};

inline Matrix epanechnikov_weights(const Vector& positions, double bandwidth) {
  if (!(bandwidth > 0) || !std::isfinite(bandwidth)) throw BadBandwidth("bandwidth must be > 0");
  check_finite(positions, "positions");
  const Eigen::Index p = positions.size();
  Matrix W = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double t = (positions[i] - positions[j]) / bandwidth;
      if (std::abs(t) < 1.0) {
        const double w = 0.75 * (1.0 - t * t);
        W(i, j) = w;
        W(j, i) = w;
      }
    }
  return W;
}

inline QuadraticOperator weighted_laplacian(const Matrix& W) {
  if (W.rows() != W.cols()) throw AsymmetricInput("weight matrix must be square");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff()))
    throw AsymmetricInput("weight matrix must be symmetric");
  if (W.minCoeff() < 0) throw AsymmetricInput("weights must be nonnegative");
  if (W.diagonal().cwiseAbs().maxCoeff() > 0) throw AsymmetricInput("diagonal must be zero");
  QuadraticOperator op;
  op.Q = Matrix(W.rowwise().sum().asDiagonal()) - W;
  op.kind = "laplacian";
  return op;
}

inline QuadraticOperator epanechnikov_laplacian(const Vector& positions, double bandwidth) {
  QuadraticOperator op = weighted_laplacian(epanechnikov_weights(positions, bandwidth));
  op.positions = positions;
  op.bandwidth = bandwidth;
  return op;
}

// Wrap a user matrix after symmetry/PSD validation. Eigenvalues in
// [-1e-8, 0) are treated as roundoff and clamped by symmetric reconstruction.
inline QuadraticOperator validate_psd(const Matrix& Qin) {
  if (Qin.rows() != Qin.cols()) throw NotSymmetric("operator must be square");
  check_finite(Qin, "operator");
  const double scale = std::max(1.0, Qin.cwiseAbs().maxCoeff());
  if ((Qin - Qin.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotSymmetric("operator must be symmetric");
  const Matrix Qs = 0.5 * (Qin + Qin.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Qs);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-8 * scale)
    throw NotPSD("smallest eigenvalue " + std::to_string(min_eig));
  QuadraticOperator op;
  if (min_eig < 0) {
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    op.Q = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  } else {
    op.Q = Qs;
  }
  op.kind = "custom";
  op.is_identity = (op.Q - Matrix::Identity(op.Q.rows(), op.Q.cols())).cwiseAbs().maxCoeff() == 0;
  if (op.is_identity) op.kind = "identity";
  return op;
}

struct BandwidthCandidate {
  double bandwidth = 0;
  double explained = -1;  // ‖XQv₁‖²/‖X‖²_F, -1 when the operator degenerated
  bool degenerate = false;
};

struct BandwidthSearch {
  QuadraticOperator chosen;
  std::vector<BandwidthCandidate> candidates;
};

// Pick the bandwidth whose first structured component at λ = 0 explains the
// most variance of X (component computed on the self cross-product, so no
// response is needed). Ties break toward the smaller bandwidth.
inline BandwidthSearch operator_bandwidth_search(const Matrix& X, const Vector& positions,
                                                 const std::vector<double>& bandwidths) {
  if (bandwidths.empty()) throw BadRange("bandwidth candidate list is empty");
  if (X.cols() != positions.size())
    throw DimensionMismatch("operator_bandwidth_search: positions per column");
  check_data(X, "operator_bandwidth_search");
  const Matrix Xc = X.rowwise() - X.colwise().mean();
  const double total = Xc.squaredNorm();
  const CrossProduct self{Xc.transpose() * Xc, 0};
  BandwidthSearch out;
  int best = -1;
  for (double h : bandwidths) {
    BandwidthCandidate cand;
    cand.bandwidth = h;
    QuadraticOperator op = epanechnikov_laplacian(positions, h);
    if (op.Q.cwiseAbs().maxCoeff() <= 0) {
      cand.degenerate = true;  // empty graph: Eq-(2) constraint is vacuous
    } else {
      PenaltySpec none;
      const auto res = solve_single_factor(self, none, &op.Q);
      if (res.degenerate) {
        cand.degenerate = true;
      } else {
        cand.explained = (Xc * (op.Q * res.v)).squaredNorm() / total;
      }
    }
    out.candidates.push_back(cand);
    if (!cand.degenerate) {
      const bool better =
          best < 0 || cand.explained > out.candidates[size_t(best)].explained + 1e-12 ||
          (std::abs(cand.explained - out.candidates[size_t(best)].explained) <= 1e-12 &&
           h < out.candidates[size_t(best)].bandwidth);
      if (better) best = int(out.candidates.size()) - 1;
    }
  }
  if (best < 0) throw DegenerateOperator("every candidate bandwidth yields an unusable operator");
  out.chosen = epanechnikov_laplacian(positions, out.candidates[size_t(best)].bandwidth);
  return out;
}

}  // namespace rpls
