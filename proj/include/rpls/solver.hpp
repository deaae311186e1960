#pragma once

// Single-factor solvers: alternating u/v updates for
//   max v'QMu - lambda*P(v)  s.t.  v'Qv <= 1, u'u = 1
// (Q = identity for the unstructured problem). The v half-step solves a
// penalized regression in the Q metric and renormalizes; the u half-step is a
// closed-form projection. Objectives are tracked per iteration so monotone
// ascent is checkable after the fact.

#include <cmath>
#include <vector>

#include "rpls/linalg.hpp"
#include "rpls/penalties.hpp"
#include "rpls/rng.hpp"

namespace rpls {

struct SolverOptions {
  // convergence is declared on iterate change: u and v live on unit spheres,
  // so the max-norm change is already dimensionless. An objective-change test
  // would stop too early (the objective is flat near the optimum and leaves
  // the stationarity residual orders of magnitude larger than the tolerance).
  double tol = 1e-10;
  int max_iter = 1000;
  // optional warm start; SVD initialization otherwise
  bool has_init = false;
  Vector u0, v0;

  SolverOptions with_init(const Vector& u, const Vector& v) const {
    SolverOptions o = *this;
    o.has_init = true;
    o.u0 = u;
    o.v0 = v;
    return o;
  }
};

struct FactorResult {
  Vector u;     // unit q-vector (zero when degenerate)
  Vector v;     // loading, v'Qv = 1 (zero when degenerate)
  Vector vhat;  // unnormalized penalized-regression solution (BIC df/residual input)
  std::vector<double> trace;
  bool converged = false;
  bool degenerate = false;
  int iterations = 0;
  double objective = 0.0;
};

inline double objective(const CrossProduct& cp, const Vector& u, const Vector& v,
                        const PenaltySpec& spec, const Matrix* Q = nullptr) {
  const Vector Mu = cp.M * u;
  const double fit = Q ? double((*Q * v).dot(Mu)) : v.dot(Mu);
  return fit - spec.lambda * penalty_value(spec, v);
}

inline Vector update_u(const CrossProduct& cp, const Vector& v, const Matrix* Q = nullptr) {
  const Vector dir = Q ? Vector(cp.M.transpose() * (*Q * v)) : Vector(cp.M.transpose() * v);
  const double n = dir.norm();
  if (n < 1e-14) throw DegenerateDirection("update_u: M'Qv ~ 0");
  return dir / n;
}

namespace detail {

// cyclic coordinate descent for min_v ½v'Qv − v'Qa + λP(v) with a separable
// penalty (none/lasso, optionally nonnegative). Exact coordinate minimizers;
// Q is only ever applied row-wise, never inverted. Q_jj = 0 forces v_j = 0
// (PSD zero-diagonal implies a zero row).
inline Vector q_separable_cd(const Matrix& Q, const Vector& a, const PenaltySpec& spec,
                             Vector v, int max_sweeps = 2000, double tol = 1e-10) {
  const double l = spec.lambda;
  const Vector qa = Q * a;
  Vector t = Q * v;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double qjj = Q(j, j);
      double nv;
      if (qjj <= 0) {
        nv = 0.0;
      } else {
        const double c = qa[j] - (t[j] - qjj * v[j]);
        switch (spec.family) {
          case PenaltyFamily::none:
            nv = c / qjj;
            if (spec.nonnegative && nv < 0) nv = 0;
            break;
          case PenaltyFamily::lasso:
            if (spec.nonnegative)
              nv = c > l ? (c - l) / qjj : 0.0;
            else {
              const double s = std::abs(c) - l;
              nv = s > 0 ? (c > 0 ? s : -s) / qjj : 0.0;
            }
            break;
          default:
            throw Error("q_separable_cd: non-separable penalty");
        }
      }
      if (nv != v[j]) {
        t += (nv - v[j]) * Q.col(j);
        delta = std::max(delta, std::abs(nv - v[j]));
        v[j] = nv;
      }
    }
    if (delta <= tol * std::max(1.0, v.cwiseAbs().maxCoeff())) break;
  }
  return v;
}

// proximal gradient for the group penalty in the Q metric (no closed-form
// coordinate update exists once Q couples the group's coordinates)
inline Vector q_group_pg(const Matrix& Q, const Vector& a, const PenaltySpec& spec, Vector v,
                         double lipschitz, int max_iter = 5000, double tol = 1e-10) {
  const PenaltySpec step = spec.with_lambda(spec.lambda / lipschitz);
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = Q * (v - a);
    const Vector vn = prox(step, v - g / lipschitz);
    const double delta = (vn - v).cwiseAbs().maxCoeff();
    v = vn;
    if (delta <= tol * std::max(1.0, v.cwiseAbs().maxCoeff())) break;
  }
  return v;
}

// Gershgorin bound on the largest eigenvalue. An upper bound is all the
// proximal step needs, and unlike power iteration it cannot be fooled by an
// unlucky start (the ones vector is exactly a Laplacian's null eigenvector).
inline double lipschitz_bound(const Matrix& Q) {
  const double bound = Q.cwiseAbs().rowwise().sum().maxCoeff();
  return std::max(bound, 1e-12);
}

}  // namespace detail

struct VUpdate {
  Vector v;     // Q-norm-normalized loading (zero if the penalty kills it)
  Vector vhat;  // raw subproblem solution
};

// v half-step: solve min ½‖Mu − v‖²_Q + λP(v), then normalize by the Q norm.
// `warm` seeds the iterative structured solve; `lipschitz` caches λmax(Q) for
// the group path (pass 0 to have it computed).
inline VUpdate update_v_full(const CrossProduct& cp, const Vector& u, const PenaltySpec& spec,
                             const Matrix* Q = nullptr, const Vector* warm = nullptr,
                             double lipschitz = 0) {
  const Vector a = cp.M * u;
  VUpdate out;
  if (Q == nullptr) {
    out.vhat = prox(spec, a);
  } else if (spec.family == PenaltyFamily::group_lasso) {
    validate_groups(spec, int(a.size()));
    const double L = lipschitz > 0 ? lipschitz : detail::lipschitz_bound(*Q);
    out.vhat = detail::q_group_pg(*Q, a, spec, warm ? *warm : a, L);
  } else if (spec.family == PenaltyFamily::none && !spec.nonnegative) {
    out.vhat = a;  // any Q-metric projection of a onto itself
  } else {
    out.vhat = detail::q_separable_cd(*Q, a, spec, warm ? *warm : a);
  }
  const double n = q_norm(out.vhat, Q);
  out.v = n > 1e-14 ? Vector(out.vhat / n) : Vector(Vector::Zero(a.size()));
  return out;
}

inline Vector update_v(const CrossProduct& cp, const Vector& u, const PenaltySpec& spec,
                       const Matrix* Q = nullptr) {
  return update_v_full(cp, u, spec, Q).v;
}

namespace detail {

struct SvdInit {
  Vector u, v;
};

inline SvdInit svd_init(const Matrix& M) {
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdInit init{svd.matrixV().col(0), svd.matrixU().col(0)};
  int arg = 0;
  init.v.cwiseAbs().maxCoeff(&arg);
  if (init.v[arg] < 0) {
    init.v = -init.v;
    init.u = -init.u;
  }
  return init;
}

}  // namespace detail

inline FactorResult solve_single_factor(const CrossProduct& cp, const PenaltySpec& spec,
                                        const Matrix* Q = nullptr,
                                        const SolverOptions& opts = {}) {
  const Matrix& M = cp.M;
  if (M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0) throw ZeroMatrix("solve_single_factor");
  const double lipschitz =
      (Q && spec.family == PenaltyFamily::group_lasso) ? detail::lipschitz_bound(*Q) : 0;

  Vector u, v;
  if (opts.has_init) {
    u = opts.u0;
    v = opts.v0;
  } else {
    const auto init = detail::svd_init(M);
    u = init.u;
    v = init.v;
  }

  FactorResult res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    res = FactorResult{};
    res.u = u;
    res.v = v;
    bool failed_direction = false;
    for (int it = 0; it < opts.max_iter; ++it) {
      auto vu = update_v_full(cp, res.u, spec, Q, it > 0 ? &res.vhat : nullptr, lipschitz);
      if (vu.v.isZero(0.0)) {
        res.v = vu.v;
        res.vhat = vu.vhat;
        res.u.setZero();
        res.degenerate = true;
        res.iterations = it + 1;
        res.objective = 0.0;
        return res;
      }
      const double dv = it > 0 ? (vu.v - res.v).cwiseAbs().maxCoeff() : 1.0;
      res.v = vu.v;
      res.vhat = vu.vhat;
      Vector u_next;
      try {
        u_next = update_u(cp, res.v, Q);
      } catch (const DegenerateDirection&) {
        failed_direction = true;
        break;
      }
      const double du = it > 0 ? (u_next - res.u).cwiseAbs().maxCoeff() : 1.0;
      res.u = u_next;
      res.trace.push_back(objective(cp, res.u, res.v, spec, Q));
      res.iterations = it + 1;
      if (std::max(du, dv) <= opts.tol) {
        res.converged = true;
        break;
      }
    }
    if (!failed_direction) break;
    if (attempt == 1) {
      // second landing on the null space: give up as degenerate
      res.v.setZero();
      res.u.setZero();
      res.degenerate = true;
      return res;
    }
    // restart once from a deterministically perturbed initialization
    Rng r(0x9E3779B97F4A7C15ull);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.01 * r.normal();
    v.normalize();
  }

  res.objective = res.trace.empty() ? objective(cp, res.u, res.v, spec, Q) : res.trace.back();

  // resolve the joint sign ambiguity (sign-symmetric penalties only)
  if (!spec.nonnegative && !res.degenerate) {
    bool flip = false;
    if (M.cols() == 1) {
      flip = res.u[0] < 0;
    } else {
      int arg = 0;
      res.v.cwiseAbs().maxCoeff(&arg);
      flip = res.v[arg] < 0;
    }
    if (flip) {
      res.u = -res.u;
      res.v = -res.v;
      res.vhat = -res.vhat;
    }
  }
  return res;
}

// Stationarity residual of the constrained problem at (u, v): with
// multiplier 2γ = ‖vhat‖_Q, checks QMu − λg − 2γQv = 0 over the best valid
// subgradient g. Degenerate v = 0 checks that the zero loading is justified.
inline double kkt_residual(const CrossProduct& cp, const FactorResult& res,
                           const PenaltySpec& spec, const Matrix* Q = nullptr) {
  const double l = spec.lambda;
  if (res.degenerate || res.v.isZero(0.0)) {
    // subgradient at 0 must absorb QMu (u may be zeroed out; fall back to a unit direction)
    Vector a = cp.M * (res.u.norm() > 0 ? res.u : Vector(Vector::Ones(cp.M.cols()).normalized()));
    if (Q) a = *Q * a;
    double worst = 0;
    if (spec.family == PenaltyFamily::group_lasso) {
      for (const auto& g : spec.groups) {
        double nrm = 0;
        for (int j : g) {
          const double aj = spec.nonnegative ? std::max(0.0, a[j]) : a[j];
          nrm += aj * aj;
        }
        worst = std::max(worst, std::sqrt(nrm) - l);
      }
    } else {
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double excess = spec.nonnegative ? a[i] - l : std::abs(a[i]) - l;
        worst = std::max(worst, excess);
      }
    }
    return std::max(0.0, worst);
  }

  const Vector Mu = cp.M * res.u;
  const double gamma2 = Q ? q_norm(res.vhat, Q) : res.vhat.norm();
  Vector r0;
  if (Q)
    r0 = *Q * Mu - gamma2 * (*Q * res.v);
  else
    r0 = Mu - gamma2 * res.v;

  double worst = 0;
  if (spec.family == PenaltyFamily::group_lasso) {
    // under nonnegativity a coordinate clamped at 0 carries its own multiplier,
    // so only the positive part of its residual is a violation
    for (const auto& g : spec.groups) {
      double vn = 0;
      for (int j : g) vn += res.v[j] * res.v[j];
      vn = std::sqrt(vn);
      if (vn > 0) {
        for (int j : g) {
          if (spec.nonnegative && res.v[j] == 0.0)
            worst = std::max(worst, r0[j]);
          else
            worst = std::max(worst, std::abs(r0[j] - l * res.v[j] / vn));
        }
      } else {
        double rn = 0;
        for (int j : g) {
          const double rj = spec.nonnegative ? std::max(0.0, r0[j]) : r0[j];
          rn += rj * rj;
        }
        worst = std::max(worst, std::sqrt(rn) - l);
      }
    }
    return std::max(0.0, worst);
  }
  for (Eigen::Index i = 0; i < r0.size(); ++i) {
    const double vi = res.v[i];
    double excess;
    if (vi != 0.0) {
      excess = spec.nonnegative && vi > 0 ? std::abs(r0[i] - l)
                                          : std::abs(r0[i] - l * (vi > 0 ? 1.0 : -1.0));
    } else {
      excess = std::max(0.0, spec.nonnegative ? r0[i] - l : std::abs(r0[i]) - l);
    }
    worst = std::max(worst, excess);
  }
  return worst;
}

}  // namespace rpls
