#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rpls/linalg.hpp"
#include "rpls/types.hpp"

namespace rpls {

enum class PenaltyFamily { none, lasso, group_lasso };

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::none;
  std::vector<std::vector<int>> groups;  // partition of 0..p-1, group_lasso only
  bool nonnegative = false;
  double lambda = 0.0;

  PenaltySpec with_lambda(double l) const {
    PenaltySpec s = *this;
    s.lambda = l;
    return s;
  }
};

inline void validate_groups(const PenaltySpec& spec, int p) {
  if (spec.family != PenaltyFamily::group_lasso) return;
  std::vector<int> seen(p, 0);
  for (const auto& g : spec.groups) {
    if (g.empty()) throw BadGroups("empty group");
    for (int j : g) {
      if (j < 0 || j >= p) throw BadGroups("group index " + std::to_string(j) + " out of range");
      if (seen[j]++) throw BadGroups("variable " + std::to_string(j) + " in two groups");
    }
  }
  for (int j = 0; j < p; ++j)
    if (!seen[j]) throw BadGroups("variable " + std::to_string(j) + " in no group");
}

inline Vector soft_threshold(const Vector& z, double lambda) {
  return z.unaryExpr([lambda](double x) {
    const double a = std::abs(x) - lambda;
    return a > 0 ? (x > 0 ? a : -a) : 0.0;
  });
}

// prox of λP(v) (+ nonnegativity indicator when set) at the point z:
// argmin ½‖z − v‖² + λP(v)
inline Vector prox(const PenaltySpec& spec, const Vector& z) {
  const double l = spec.lambda;
  switch (spec.family) {
    case PenaltyFamily::none:
      return spec.nonnegative ? Vector(z.cwiseMax(0.0)) : z;
    case PenaltyFamily::lasso:
      if (spec.nonnegative) return (z.array() - l).cwiseMax(0.0).matrix();
      return soft_threshold(z, l);
    case PenaltyFamily::group_lasso: {
      validate_groups(spec, int(z.size()));
      Vector base = spec.nonnegative ? Vector(z.cwiseMax(0.0)) : z;
      Vector v = Vector::Zero(z.size());
      for (const auto& g : spec.groups) {
        double nrm = 0;
        for (int j : g) nrm += base[j] * base[j];
        nrm = std::sqrt(nrm);
        if (nrm <= l) continue;
        const double shrink = 1.0 - l / nrm;
        for (int j : g) v[j] = shrink * base[j];
      }
      return v;
    }
  }
  throw Error("prox: unknown family");
}

inline double penalty_value(const PenaltySpec& spec, const Vector& v) {
  switch (spec.family) {
    case PenaltyFamily::none:
      return 0.0;
    case PenaltyFamily::lasso:
      return v.lpNorm<1>();
    case PenaltyFamily::group_lasso: {
      double s = 0;
      for (const auto& g : spec.groups) {
        double nrm = 0;
        for (int j : g) nrm += v[j] * v[j];
        s += std::sqrt(nrm);
      }
      return s;
    }
  }
  throw Error("penalty_value: unknown family");
}

// Smallest λ collapsing the first factor. Exact for q = 1 (from the KKT
// conditions); for q > 1 only a conservative row-norm bound exists, flagged
// through *heuristic so callers know to discard degenerate grid points.
inline double lambda_max(const CrossProduct& cp, const PenaltySpec& spec,
                         bool* heuristic = nullptr) {
  const Matrix& M = cp.M;
  if (M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0) throw ZeroMatrix("lambda_max");
  if (heuristic) *heuristic = M.cols() > 1;
  if (spec.family == PenaltyFamily::group_lasso) {
    validate_groups(spec, int(M.rows()));
    double best = 0;
    for (const auto& g : spec.groups) {
      double nrm = 0;
      for (int j : g) nrm += M.row(j).squaredNorm();
      best = std::max(best, std::sqrt(nrm));
    }
    return best;
  }
  if (M.cols() == 1) return M.cwiseAbs().maxCoeff();
  return M.rowwise().norm().maxCoeff();
}

struct LambdaGrid {
  std::vector<double> values;  // strictly decreasing
  double max = 0, floor = 0;

  int size() const { return int(values.size()); }
  double operator[](int i) const { return values[size_t(i)]; }
};

inline LambdaGrid lambda_grid(double lmax, int count, double floor = 1e-5) {
  if (!(lmax > floor) || !(floor > 0) || count < 2) throw BadRange("lambda_grid");
  LambdaGrid g;
  g.max = lmax;
  g.floor = floor;
  g.values.resize(size_t(count));
  const double top = std::log(lmax), bot = std::log(floor);
  for (int i = 0; i < count; ++i)
    g.values[size_t(i)] = std::exp(top + (bot - top) * double(i) / double(count - 1));
  g.values.front() = lmax;
  g.values.back() = floor;
  return g;
}

}  // namespace rpls
