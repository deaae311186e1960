#pragma once

// Multi-factor fitting: per-factor penalized solve, Gram-Schmidt factor
// orthogonalization, projection-based deflation of the cross product.
//
// Penalized loadings v_k do not give exactly orthogonal factors Xv_k (the prox
// step leaves an O(λ) component inside the span of earlier weights), so each
// new factor is orthogonalized against its predecessors and the model carries
// both matrices: V holds the sparse loadings (supports, interpretation), W the
// transform weights with Z = X_std·W exact. At λ = 0 the correction vanishes
// and W equals V.

#include <functional>
#include <string>
#include <vector>

#include "rpls/operators.hpp"
#include "rpls/solver.hpp"
#include "rpls/standardize.hpp"

namespace rpls {

struct FactorDiagnostics {
  double lambda = 0;
  int iterations = 0;
  bool converged = false;
  int support = 0;
  double objective = 0;
  std::vector<double> trace;
};

struct RplsModel {
  Matrix V;  // p×K penalized loadings
  Matrix W;  // p×K transform weights, Z = X_std·W
  Matrix Z;  // n×K training factors (mutually orthogonal)
  Matrix R;  // p×K projection weights X'z/(z'z)
  std::vector<double> lambda;
  PenaltySpec penalty;  // family/groups/nonneg; per-factor λ in `lambda`
  bool structured = false;
  Matrix Q;  // owned copy when structured
  ColumnStats x_stats, y_stats;
  std::vector<FactorDiagnostics> diagnostics;
  std::string stop_reason;  // empty when all requested factors were extracted

  int K() const { return int(V.cols()); }
  int p() const { return int(V.rows()); }
};

// per-factor λ hook: receives the deflated cross product and the factor index
using LambdaRule = std::function<double(const CrossProduct&, int)>;

inline int max_factors(Eigen::Index n, Eigen::Index p) { return int(std::min(n - 1, p)); }

inline RplsModel fit(const StandardizedData& data, int K, const PenaltySpec& spec,
                     const Matrix* Q = nullptr, const SolverOptions& opts = {},
                     const LambdaRule& lambda_rule = {}) {
  const Eigen::Index n = data.X.rows(), p = data.X.cols();
  if (K < 1 || K > max_factors(n, p))
    throw DimensionError("fit: K must be in [1, min(n-1, p)]");
  if (Q && (Q->rows() != p || Q->cols() != p)) throw DimensionError("fit: operator size");
  validate_groups(spec, int(p));

  RplsModel model;
  model.penalty = spec;
  model.structured = Q != nullptr;
  if (Q) model.Q = *Q;
  model.x_stats = data.x_stats;
  model.y_stats = data.y_stats;
  model.V.resize(p, 0);
  model.W.resize(p, 0);
  model.Z.resize(n, 0);
  model.R.resize(p, 0);

  CrossProduct cp = cross_product(data);
  const double m0 = cp.M.cwiseAbs().maxCoeff();
  if (m0 == 0.0) throw DegenerateFactor("fit: X'Y is zero");
  ProjectionState state;

  for (int k = 0; k < K; ++k) {
    if (cp.M.cwiseAbs().maxCoeff() <= 1e-12 * m0) {
      model.stop_reason = "cross product exhausted";
      break;
    }
    const double lam = lambda_rule ? lambda_rule(cp, k) : spec.lambda;
    const auto res = solve_single_factor(cp, spec.with_lambda(lam), Q, opts);
    if (res.degenerate) {
      if (k == 0) throw DegenerateFactor("fit: first factor degenerate at lambda=" +
                                         std::to_string(lam));
      model.stop_reason = "degenerate factor";
      break;
    }

    const Vector base = Q ? Vector(*Q * res.v) : res.v;  // z = X(Qv) structured
    Vector z = data.X * base;
    Vector w = base;
    for (int j = 0; j < model.K(); ++j) {
      const double c = model.R.col(j).dot(base);
      z -= c * model.Z.col(j);
      w -= c * model.W.col(j);
    }
    const double zn2 = z.squaredNorm();
    if (zn2 <= 1e-12 * std::max(1.0, base.squaredNorm())) {
      if (k == 0) throw DegenerateFactor("fit: first factor has zero score");
      model.stop_reason = "zero score after orthogonalization";
      break;
    }
    const Vector r = data.X.transpose() * z / zn2;
    try {
      state.append(r, Q);
    } catch (const DegenerateFactor&) {
      if (k == 0) throw;
      model.stop_reason = "projection state singular";
      break;
    }

    const int m = model.K();
    model.V.conservativeResize(Eigen::NoChange, m + 1);
    model.W.conservativeResize(Eigen::NoChange, m + 1);
    model.Z.conservativeResize(Eigen::NoChange, m + 1);
    model.R.conservativeResize(Eigen::NoChange, m + 1);
    model.V.col(m) = res.v;
    model.W.col(m) = w;
    model.Z.col(m) = z;
    model.R.col(m) = r;
    model.lambda.push_back(lam);
    FactorDiagnostics d;
    d.lambda = lam;
    d.iterations = res.iterations;
    d.converged = res.converged;
    d.support = int((res.v.array() != 0.0).count());
    d.objective = res.objective;
    d.trace = res.trace;
    model.diagnostics.push_back(std::move(d));

    cp = project_out(cp, state, Q);
  }
  return model;
}

inline Matrix transform(const RplsModel& model, const Matrix& X_new) {
  if (X_new.cols() != model.p()) throw DimensionError("transform: column count");
  check_finite(X_new, "transform");
  return apply_standardization(X_new, model.x_stats) * model.W;
}

}  // namespace rpls
