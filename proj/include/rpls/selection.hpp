#pragma once

// Model selection: per-factor λ by BIC over a descending grid (warm-started),
// sparse post-selection of the factor count via soft-thresholded coefficients
// on orthonormalized factors, and seeded k-fold cross-validation plumbing.

#include <functional>
#include <limits>
#include <vector>

#include "rpls/rng.hpp"
#include "rpls/solver.hpp"

namespace rpls {

struct BicResult {
  LambdaGrid grid;
  std::vector<double> bic;       // NaN at degenerate grid points
  std::vector<int> df;
  std::vector<char> degenerate;
  double chosen = 0;
  int chosen_index = -1;
};

// BIC over the λ grid for one factor extraction on the (deflated) cross
// product. The residual is the rank-one reconstruction error ‖M − v̂u'‖²_F
// evaluated at the unnormalized v̂ (for a single response column this equals
// ‖Mu − v̂‖² exactly). df counts v̂'s support (total size of active groups for
// the group penalty). Ties prefer larger λ; the grid is descending, so the
// first strict improvement wins.
inline BicResult bic_select_lambda(const CrossProduct& cp, const PenaltySpec& family,
                                   const LambdaGrid& grid, const Matrix* Q = nullptr,
                                   const SolverOptions& opts = {}) {
  if (grid.size() == 0) throw BadRange("bic_select_lambda: empty grid");
  const double pq = double(cp.M.rows()) * double(cp.M.cols());
  const double m_norm2 = cp.M.squaredNorm();
  BicResult out;
  out.grid = grid;
  out.bic.assign(size_t(grid.size()), std::numeric_limits<double>::quiet_NaN());
  out.df.assign(size_t(grid.size()), 0);
  out.degenerate.assign(size_t(grid.size()), 0);
  SolverOptions warm = opts;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i) {
    const auto res = solve_single_factor(cp, family.with_lambda(grid[i]), Q, warm);
    if (res.degenerate) {
      out.degenerate[size_t(i)] = 1;
      warm = opts;  // cold restart after a dead grid point
      continue;
    }
    warm = opts.with_init(res.u, res.v);
    int df = 0;
    if (family.family == PenaltyFamily::group_lasso) {
      for (const auto& g : family.groups) {
        bool active = false;
        for (int j : g) active = active || res.vhat[j] != 0.0;
        if (active) df += int(g.size());
      }
    } else {
      df = int((res.vhat.array() != 0.0).count());
    }
    const double rss =
        std::max(m_norm2 - 2.0 * res.vhat.dot(cp.M * res.u) + res.vhat.squaredNorm(), 1e-300);
    const double bic = std::log(rss / pq) + std::log(pq) / pq * double(df);
    out.bic[size_t(i)] = bic;
    out.df[size_t(i)] = df;
    if (bic < best - 1e-12) {
      best = bic;
      out.chosen = grid[i];
      out.chosen_index = i;
    }
  }
  if (out.chosen_index < 0) throw AllDegenerate("bic_select_lambda: every λ kills the factor");
  return out;
}

// λ rule for pipeline::fit: per factor, rebuild the grid from the deflated
// cross product's own λ_max and pick by BIC. The factor is re-solved by the
// pipeline at the returned λ; the duplicated solve is cheap next to the grid.
inline std::function<double(const CrossProduct&, int)> make_bic_rule(
    const PenaltySpec& family, int grid_size = 25, const Matrix* Q = nullptr,
    const SolverOptions& opts = {}) {
  Matrix q_copy;
  const bool structured = Q != nullptr;
  if (structured) q_copy = *Q;
  return [family, grid_size, structured, q_copy, opts](const CrossProduct& cp, int) {
    const double lmax = lambda_max(cp, family);
    const auto grid = lambda_grid(lmax, grid_size);
    const auto pick = bic_select_lambda(cp, family, grid, structured ? &q_copy : nullptr, opts);
    return pick.chosen;
  };
}

struct GammaPoint {
  double gamma = 0;
  double bic = 0;
  int df = 0;     // nonzero coefficient entries
  int K = 0;      // factors with any nonzero coefficient
};

struct KSelection {
  std::vector<GammaPoint> path;
  Matrix beta;  // K_max×q coefficients at the chosen γ (soft-thresholded)
  double chosen = 0;
  int chosen_index = -1;
  int K = 0;
  bool degenerate = false;  // chosen γ shrank every coefficient to zero
};

// β̂(γ) = S(Z'Y, γ) on unit-norm orthogonal factors; γ by
// BIC = n·log(RSS/n) + log(n)·df with df = |supp(β̂)|. Ties prefer larger γ.
inline KSelection select_k_sparse(const Matrix& Z, const Matrix& Y,
                                  const std::vector<double>& gamma_grid) {
  if (Z.rows() != Y.rows()) throw DimensionMismatch("select_k_sparse: row counts");
  if (gamma_grid.empty()) throw BadRange("select_k_sparse: empty grid");
  const Eigen::Index n = Z.rows(), K = Z.cols();
  for (Eigen::Index k = 0; k < K; ++k) {
    if (std::abs(Z.col(k).norm() - 1.0) > 1e-8)
      throw NonOrthogonalFactors("select_k_sparse: factor " + std::to_string(k) +
                                 " is not unit-norm");
    for (Eigen::Index j = 0; j < k; ++j)
      if (std::abs(Z.col(k).dot(Z.col(j))) > 1e-8)
        throw NonOrthogonalFactors("select_k_sparse: factors " + std::to_string(j) + "," +
                                   std::to_string(k) + " not orthogonal");
  }
  const Matrix C = Z.transpose() * Y;
  const double yn2 = Y.squaredNorm();
  KSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < gamma_grid.size(); ++i) {
    const double g = gamma_grid[i];
    if (g < 0) throw BadRange("select_k_sparse: negative γ");
    Matrix beta = C.unaryExpr([g](double x) {
      const double a = std::abs(x) - g;
      return a > 0 ? (x > 0 ? a : -a) : 0.0;
    });
    // orthonormal factors: ‖Y − Zβ‖² = ‖Y‖² − 2⟨β,C⟩ + ‖β‖²
    const double rss = std::max(yn2 - 2.0 * (beta.array() * C.array()).sum() +
                                    beta.squaredNorm(),
                                1e-300);
    GammaPoint pt;
    pt.gamma = g;
    pt.df = int((beta.array() != 0.0).count());
    for (Eigen::Index k = 0; k < K; ++k)
      if ((beta.row(k).array() != 0.0).any()) ++pt.K;
    pt.bic = double(n) * std::log(rss / double(n)) + std::log(double(n)) * double(pt.df);
    out.path.push_back(pt);
    if (pt.bic < best - 1e-12) {
      best = pt.bic;
      out.chosen = g;
      out.chosen_index = int(i);
      out.K = pt.K;
      out.beta = std::move(beta);
    }
  }
  out.degenerate = out.K == 0;
  return out;
}

struct CvResult {
  std::vector<double> mean;  // per candidate, across folds
  std::vector<double> se;    // sd of fold metrics / √folds
  int folds = 0;
};

// Candidate-vector evaluator: gets raw train/validation splits, returns one
// metric value per candidate for that fold (fold metrics are averaged with
// equal weight). Standardization happens inside the callback so no statistics
// leak from the held-out rows.
using FoldEvaluator =
    std::function<std::vector<double>(const Matrix& Xtr, const Matrix& Ytr, const Matrix& Xva,
                                      const Matrix& Yva)>;

inline std::vector<int> cv_fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  std::vector<int> fold(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fold[size_t(i)] = int(i) % folds;
  Rng r(seed);
  r.shuffle(fold.begin(), fold.end());
  return fold;
}

inline CvResult cross_validate(const Matrix& X, const Matrix& Y, int folds, std::uint64_t seed,
                               const FoldEvaluator& evaluate) {
  const Eigen::Index n = X.rows();
  if (X.rows() != Y.rows()) throw DimensionMismatch("cross_validate: row counts");
  if (folds < 2) throw BadRange("cross_validate: folds must be ≥ 2");
  if (n < folds) throw TooFewSamples("cross_validate: fewer samples than folds");
  const auto fold = cv_fold_assignment(n, folds, seed);

  std::vector<std::vector<double>> per_fold;  // [fold][candidate]
  for (int f = 0; f < folds; ++f) {
    Eigen::Index ntr = 0;
    for (Eigen::Index i = 0; i < n; ++i) ntr += fold[size_t(i)] != f;
    Matrix Xtr(ntr, X.cols()), Ytr(ntr, Y.cols());
    Matrix Xva(n - ntr, X.cols()), Yva(n - ntr, Y.cols());
    Eigen::Index a = 0, b = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold[size_t(i)] != f) {
        Xtr.row(a) = X.row(i);
        Ytr.row(a++) = Y.row(i);
      } else {
        Xva.row(b) = X.row(i);
        Yva.row(b++) = Y.row(i);
      }
    }
    per_fold.push_back(evaluate(Xtr, Ytr, Xva, Yva));
    if (per_fold.back().size() != per_fold.front().size())
      throw Error("cross_validate: candidate count changed between folds");
  }

  const size_t m = per_fold.front().size();
  CvResult out;
  out.folds = folds;
  out.mean.assign(m, 0.0);
  out.se.assign(m, 0.0);
  for (size_t c = 0; c < m; ++c) {
    double s = 0;
    for (int f = 0; f < folds; ++f) s += per_fold[size_t(f)][c];
    const double mean = s / folds;
    double ss = 0;
    for (int f = 0; f < folds; ++f) {
      const double d = per_fold[size_t(f)][c] - mean;
      ss += d * d;
    }
    out.mean[c] = mean;
    out.se[c] = folds > 1 ? std::sqrt(ss / double(folds - 1)) / std::sqrt(double(folds)) : 0.0;
  }
  return out;
}

}  // namespace rpls
