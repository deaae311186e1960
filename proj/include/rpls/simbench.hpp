#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "rpls/pipeline.hpp"
#include "rpls/prediction.hpp"
#include "rpls/selection.hpp"

namespace rpls {

// ---------------------------------------------------------------------------
// Synthetic data generators

struct SimData {
  Matrix X_train, Y_train, X_test, Y_test;
  std::vector<int> truth;  // indices of the true predictors
};

// generator internals, exposed on request so moment checks can see the
// hidden variables directly
struct UnivariateInternals {
  Matrix H_train, H_test;
  double noise_sd = 0;
};

struct MultivariateInternals {
  Matrix A, B, H_train, H_test;
  double ones = 0;  // tr(H_train H_train')
  double sd_b = 0;
};

// Three hidden N(0, 25) variables; the first 3p/8 predictors read H1 plus unit
// noise, the next 3p/8 read H2, the rest read H3. The response 3H1 - 4H2 has
// variance 625, so the noise variance is 625/snr (the snr is defined against
// the signal, not against one hidden variable).
inline SimData gen_univariate(int n, int p, double snr, std::uint64_t seed,
                              std::uint64_t stream = 0, UnivariateInternals* internals = nullptr) {
  if (p < 8 || p % 8 != 0) throw BadShape("gen_univariate: p must be a positive multiple of 8");
  if (n < 2) throw BadShape("gen_univariate: need n >= 2");
  if (!(snr > 0)) throw BadShape("gen_univariate: snr must be positive");
  Rng rng(seed, stream);
  const double noise_sd = 25.0 / std::sqrt(snr);
  const int b1 = 3 * p / 8, b2 = 3 * p / 4;

  auto draw = [&](Matrix& X, Matrix& Y, Matrix* H_out) {
    Matrix H(n, 3);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) H(i, c) = rng.normal(0.0, 5.0);
    X.resize(n, p);
    for (int j = 0; j < p; ++j) {
      const int g = j < b1 ? 0 : (j < b2 ? 1 : 2);
      for (int i = 0; i < n; ++i) X(i, j) = H(i, g) + rng.normal();
    }
    Y.resize(n, 1);
    for (int i = 0; i < n; ++i) Y(i, 0) = 3.0 * H(i, 0) - 4.0 * H(i, 1) + rng.normal(0.0, noise_sd);
    if (H_out) *H_out = std::move(H);
  };

  SimData d;
  draw(d.X_train, d.Y_train, internals ? &internals->H_train : nullptr);
  draw(d.X_test, d.Y_test, internals ? &internals->H_test : nullptr);
  if (internals) internals->noise_sd = noise_sd;
  for (int j = 0; j < b2; ++j) d.truth.push_back(j);
  return d;
}

// Eight Bernoulli(0.5) hidden variables; A is standard normal on its first
// p_true columns and zero elsewhere, X = HA + N(0, 0.1^2), Y = HB + N(0, 1).
// The B entries are drawn with standard deviation snr*n*q/tr(HH'), where
// tr(HH') counts the ones of the training H; A and B are shared between the
// train and test draws, everything else is fresh.
inline SimData gen_multivariate(int n, int p, int q, int p_true, double snr, std::uint64_t seed,
                                std::uint64_t stream = 0,
                                MultivariateInternals* internals = nullptr) {
  if (p_true < 1 || p_true > p) throw BadShape("gen_multivariate: p_true must be in [1, p]");
  if (q < 1) throw BadShape("gen_multivariate: need q >= 1");
  if (n < 2) throw BadShape("gen_multivariate: need n >= 2");
  if (!(snr > 0)) throw BadShape("gen_multivariate: snr must be positive");
  Rng rng(seed, stream);

  Matrix A = Matrix::Zero(8, p);
  for (int j = 0; j < p_true; ++j)
    for (int i = 0; i < 8; ++i) A(i, j) = rng.normal();

  Matrix Htr(n, 8);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 8; ++k) Htr(i, k) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const double ones = Htr.sum();  // tr(HH') for a 0/1 matrix
  if (ones == 0) throw BadShape("gen_multivariate: empty hidden pattern");

  const double sd_b = snr * double(n) * double(q) / ones;
  Matrix B(8, q);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < q; ++j) B(i, j) = rng.normal(0.0, sd_b);

  auto emit = [&](const Matrix& H, Matrix& X, Matrix& Y) {
    X = H * A;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) += rng.normal(0.0, 0.1);
    Y = H * B;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) Y(i, j) += rng.normal();
  };

  SimData d;
  emit(Htr, d.X_train, d.Y_train);
  Matrix Hte(n, 8);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 8; ++k) Hte(i, k) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  emit(Hte, d.X_test, d.Y_test);
  for (int j = 0; j < p_true; ++j) d.truth.push_back(j);
  if (internals) {
    internals->A = A;
    internals->B = B;
    internals->H_train = Htr;
    internals->H_test = Hte;
    internals->ones = ones;
    internals->sd_b = sd_b;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Coordinate-descent lasso on (1/2n)||y - Xb||^2 + lambda*||b||_1. This is the
// benchmark baseline and the independent check for the factor-space selector.

struct LassoFit {
  Vector beta;
  bool converged = false;
  double kkt = std::numeric_limits<double>::infinity();
};

inline LassoFit oracle_lasso(const Matrix& X, const Vector& y, double lambda,
                             int max_sweeps = 10000, double tol = 1e-10,
                             const Vector* warm = nullptr) {
  if (lambda < 0) throw BadRange("oracle_lasso: negative lambda");
  if (X.rows() != y.size()) throw DimensionMismatch("oracle_lasso: row counts");
  const Eigen::Index n = X.rows(), p = X.cols();
  Vector norm2(p);
  for (Eigen::Index j = 0; j < p; ++j) norm2[j] = X.col(j).squaredNorm() / double(n);

  LassoFit fit;
  fit.beta = warm && warm->size() == p ? *warm : Vector::Zero(p);
  Vector r = y - X * fit.beta;
  auto soft = [](double z, double t) {
    return z > t ? z - t : (z < -t ? z + t : 0.0);
  };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double step = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (norm2[j] <= 0) {
        fit.beta[j] = 0;
        continue;
      }
      const double rho = X.col(j).dot(r) / double(n) + norm2[j] * fit.beta[j];
      const double bj = soft(rho, lambda) / norm2[j];
      if (bj != fit.beta[j]) {
        r += X.col(j) * (fit.beta[j] - bj);
        step = std::max(step, std::abs(bj - fit.beta[j]));
        fit.beta[j] = bj;
      }
    }
    if (step <= 1e-14 * std::max(1.0, fit.beta.cwiseAbs().maxCoeff())) break;
  }
  const Vector g = X.transpose() * r / double(n);
  double kkt = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.beta[j] != 0.0)
      kkt = std::max(kkt, std::abs(g[j] - lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)));
    else
      kkt = std::max(kkt, std::max(std::abs(g[j]) - lambda, 0.0));
  }
  fit.kkt = kkt;
  fit.converged = kkt <= tol;
  return fit;
}

// ---------------------------------------------------------------------------
// Benchmark protocols. Grids are data-dependent (built from each training
// set's own lambda_max), so cross-validation pairs candidates across folds by
// grid index, not by value.

namespace detail_bench {

constexpr double grid_floor_ratio = 1e-4;

inline int bench_kmax(Eigen::Index n, Eigen::Index p) {
  return std::min(10, max_factors(n, p));
}

inline double mean_sd(const std::vector<double>& v, double* sd) {
  double m = 0;
  for (double x : v) m += x;
  m /= v.empty() ? 1.0 : double(v.size());
  if (sd) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    *sd = v.size() > 1 ? std::sqrt(s / double(v.size() - 1)) : 0.0;
  }
  return m;
}

// factors rescaled to unit norm, with the transform weights matched so that
// (X_std * What) reproduces the unit factors
struct UnitFactors {
  Matrix Zhat, What;
};

inline UnitFactors unit_factors(const RplsModel& m) {
  UnitFactors u;
  u.Zhat = m.Z;
  u.What = m.W;
  for (int k = 0; k < m.K(); ++k) {
    const double nz = u.Zhat.col(k).norm();
    if (!(nz > 0)) throw SingularFactors("unit_factors: zero factor");
    u.Zhat.col(k) /= nz;
    u.What.col(k) /= nz;
  }
  return u;
}

// every (lambda, gamma) candidate fitted on one training set
struct UniPath {
  StandardizedData data;
  LambdaGrid lgrid;
  struct PerLambda {
    bool degenerate = true;
    RplsModel model;
    Matrix What;
    Vector C;  // unit-factor projections Zhat'y
    LambdaGrid ggrid;
  };
  std::vector<PerLambda> fits;
};

inline UniPath build_u_path(const Matrix& X, const Matrix& Y, int grid_size) {
  UniPath path;
  path.data = standardize(X, Y, true, false);
  PenaltySpec spec;
  spec.family = PenaltyFamily::lasso;
  const CrossProduct cp = cross_product(path.data);
  const double lmax = lambda_max(cp, spec);
  path.lgrid = lambda_grid(lmax, grid_size, lmax * grid_floor_ratio);
  const int kmax = bench_kmax(X.rows(), X.cols());
  path.fits.resize(size_t(grid_size));
  for (int i = 0; i < grid_size; ++i) {
    auto& pl = path.fits[size_t(i)];
    try {
      pl.model = fit(path.data, kmax, spec.with_lambda(path.lgrid[i]));
    } catch (const DegenerateFactor&) {
      continue;  // the whole grid point collapses; treat as intercept-only
    }
    const UnitFactors uf = unit_factors(pl.model);
    pl.What = uf.What;
    pl.C = uf.Zhat.transpose() * path.data.Y;
    const double gmax = pl.C.cwiseAbs().maxCoeff();
    if (!(gmax > 0)) continue;
    pl.ggrid = lambda_grid(gmax, grid_size, gmax * grid_floor_ratio);
    pl.degenerate = false;
  }
  return path;
}

inline Vector soft_vector(const Vector& c, double t) {
  return c.unaryExpr([t](double z) { return z > t ? z - t : (z < -t ? z + t : 0.0); });
}

// squared-error loss of the mean predictor, the fallback for collapsed fits
inline double intercept_only_mspe(const Matrix& Yva, double y_mean) {
  return (Yva.array() - y_mean).square().rowwise().sum().mean();
}

struct UniChoice {
  int li = 0, gi = 0;
};

// one-standard-error rule on the index-paired loss surface: among candidates
// within one SE of the minimum, prefer the larger lambda, then the larger gamma
// (both grids descend, so that is the lexicographically smallest index pair)
inline UniChoice one_se_pick(const std::vector<double>& mean, const std::vector<double>& se,
                             int grid_size) {
  int best = -1;
  for (int k = 0; k < int(mean.size()); ++k) {
    if (!std::isfinite(mean[size_t(k)])) continue;
    if (best < 0 || mean[size_t(k)] < mean[size_t(best)]) best = k;
  }
  if (best < 0) throw AllDegenerate("one_se_pick: no finite candidate");
  const double thr = mean[size_t(best)] + se[size_t(best)];
  for (int k = 0; k < int(mean.size()); ++k)
    if (std::isfinite(mean[size_t(k)]) && mean[size_t(k)] <= thr)
      return {k / grid_size, k % grid_size};
  return {best / grid_size, best % grid_size};
}

inline std::vector<int> support_union(const RplsModel& model, const Vector& beta) {
  std::vector<char> in(size_t(model.p()), 0);
  for (int k = 0; k < model.K(); ++k) {
    if (k >= beta.size() || beta[k] == 0.0) continue;
    for (int j = 0; j < model.p(); ++j)
      if (model.V(j, k) != 0.0) in[size_t(j)] = 1;
  }
  std::vector<int> out;
  for (int j = 0; j < model.p(); ++j)
    if (in[size_t(j)]) out.push_back(j);
  return out;
}

inline std::vector<int> support_union_rows(const RplsModel& model, const Matrix& beta) {
  std::vector<char> in(size_t(model.p()), 0);
  for (int k = 0; k < model.K(); ++k) {
    if (k >= beta.rows() || beta.row(k).cwiseAbs().maxCoeff() == 0.0) continue;
    for (int j = 0; j < model.p(); ++j)
      if (model.V(j, k) != 0.0) in[size_t(j)] = 1;
  }
  std::vector<int> out;
  for (int j = 0; j < model.p(); ++j)
    if (in[size_t(j)]) out.push_back(j);
  return out;
}

}  // namespace detail_bench

// one fitted method on one replicate
struct BenchFit {
  double mspe = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> support;
  int factors = 0;  // factors carrying nonzero coefficients
};

// Single-response protocol: X standardized, y centered, one lambda shared by
// all factors, coefficient shrinkage gamma on unit-norm factors; (lambda,
// gamma) picked by 10-fold CV with the one-SE rule over index-paired grids.
inline BenchFit fit_univariate_rpls(const SimData& d, int grid_size, int folds,
                                    std::uint64_t cv_seed) {
  using namespace detail_bench;
  const auto evaluate = [&](const Matrix& Xtr, const Matrix& Ytr, const Matrix& Xva,
                            const Matrix& Yva) {
    const UniPath path = build_u_path(Xtr, Ytr, grid_size);
    const double y_mean = path.data.y_stats.mean[0];
    std::vector<double> losses(size_t(grid_size) * size_t(grid_size));
    for (int i = 0; i < grid_size; ++i) {
      const auto& pl = path.fits[size_t(i)];
      if (pl.degenerate) {
        for (int j = 0; j < grid_size; ++j)
          losses[size_t(i * grid_size + j)] = intercept_only_mspe(Yva, y_mean);
        continue;
      }
      const Matrix Zva = apply_standardization(Xva, pl.model.x_stats) * pl.What;
      for (int j = 0; j < grid_size; ++j) {
        const Vector beta = soft_vector(pl.C, pl.ggrid[j]);
        const Matrix yhat = ((Zva * beta).array() + y_mean).matrix();
        losses[size_t(i * grid_size + j)] = mspe(Yva, yhat);
      }
    }
    return losses;
  };
  const CvResult cv = cross_validate(d.X_train, d.Y_train, folds, cv_seed, evaluate);
  const UniChoice pick = one_se_pick(cv.mean, cv.se, grid_size);

  const UniPath path = build_u_path(d.X_train, d.Y_train, grid_size);
  const auto& pl = path.fits[size_t(pick.li)];
  const double y_mean = path.data.y_stats.mean[0];
  BenchFit out;
  if (pl.degenerate) {
    out.mspe = intercept_only_mspe(d.Y_test, y_mean);
    return out;
  }
  const Vector beta = soft_vector(pl.C, pl.ggrid[pick.gi]);
  const Matrix Zte = apply_standardization(d.X_test, pl.model.x_stats) * pl.What;
  const Matrix yhat = ((Zte * beta).array() + y_mean).matrix();
  out.mspe = mspe(d.Y_test, yhat);
  out.support = support_union(pl.model, beta);
  for (int k = 0; k < beta.size(); ++k)
    if (beta[k] != 0.0) ++out.factors;
  return out;
}

// Multi-response protocol: X and Y both standardized, per-factor lambda by
// BIC on the deflated cross product, factor count by BIC shrinkage of the
// factor coefficients; errors reported on the raw response scale.
inline BenchFit fit_multivariate_rpls(const SimData& d, int grid_size) {
  using namespace detail_bench;
  const StandardizedData data = standardize(d.X_train, d.Y_train, true, true);
  PenaltySpec spec;
  spec.family = PenaltyFamily::lasso;
  const LambdaRule rule = make_bic_rule(spec, grid_size);
  const int kmax = bench_kmax(d.X_train.rows(), d.X_train.cols());
  RplsModel model = fit(data, kmax, spec, nullptr, SolverOptions{}, rule);

  const UnitFactors uf = unit_factors(model);
  const Matrix C = uf.Zhat.transpose() * data.Y;
  const double gmax = C.cwiseAbs().maxCoeff();
  BenchFit out;
  if (!(gmax > 0)) {
    const Matrix yhat = Matrix::Ones(d.Y_test.rows(), 1) * data.y_stats.mean.transpose();
    out.mspe = mspe(d.Y_test, yhat);
    return out;
  }
  const LambdaGrid ggrid = lambda_grid(gmax, grid_size, gmax * detail_bench::grid_floor_ratio);
  const KSelection sel = select_k_sparse(uf.Zhat, data.Y, ggrid.values);

  const Matrix Zte = apply_standardization(d.X_test, model.x_stats) * uf.What;
  const Matrix yhat = invert_standardization(Zte * sel.beta, model.y_stats);
  out.mspe = mspe(d.Y_test, yhat);
  out.support = support_union_rows(model, sel.beta);
  out.factors = sel.K;
  return out;
}

// Plain PLS comparator: no penalty, the full factor ladder, exact least
// squares on the factors. Selects every variable by construction.
inline BenchFit fit_pls_baseline(const SimData& d, bool scale_y) {
  using namespace detail_bench;
  const StandardizedData data = standardize(d.X_train, d.Y_train, true, scale_y);
  RplsModel model = fit(data, max_factors(d.X_train.rows(), d.X_train.cols()), PenaltySpec{});
  const UnitFactors uf = unit_factors(model);
  const Matrix B = uf.Zhat.transpose() * data.Y;
  const Matrix Zte = apply_standardization(d.X_test, model.x_stats) * uf.What;
  const Matrix yhat = invert_standardization(Zte * B, model.y_stats);
  BenchFit out;
  out.mspe = mspe(d.Y_test, yhat);
  out.factors = model.K();
  out.support.resize(size_t(model.p()));
  for (int j = 0; j < model.p(); ++j) out.support[size_t(j)] = j;
  return out;
}

// Lasso comparator: 25-value grid on the (1/2n) objective, 10-fold CV minimum.
inline BenchFit fit_lasso_baseline(const SimData& d, int grid_size, int folds,
                                   std::uint64_t cv_seed) {
  using namespace detail_bench;
  const auto path_losses = [&](const Matrix& Xtr, const Matrix& Ytr, const Matrix& Xva,
                               const Matrix& Yva) {
    const StandardizedData data = standardize(Xtr, Ytr, true, false);
    const double lmax = (data.X.transpose() * data.Y).cwiseAbs().maxCoeff() / double(Xtr.rows());
    const LambdaGrid grid = lambda_grid(lmax, grid_size, lmax * grid_floor_ratio);
    const double y_mean = data.y_stats.mean[0];
    std::vector<double> losses;
    losses.reserve(size_t(grid_size));
    Vector warm = Vector::Zero(Xtr.cols());
    for (int i = 0; i < grid.size(); ++i) {
      const LassoFit lf = oracle_lasso(data.X, data.Y.col(0), grid[i], 10000, 1e-8, &warm);
      warm = lf.beta;
      const Matrix yhat = ((apply_standardization(Xva, data.x_stats) * lf.beta).array() + y_mean).matrix();
      losses.push_back(mspe(Yva, yhat));
    }
    return losses;
  };
  const CvResult cv = cross_validate(d.X_train, d.Y_train, folds, cv_seed, path_losses);
  int best = 0;
  for (int k = 1; k < int(cv.mean.size()); ++k)
    if (cv.mean[size_t(k)] < cv.mean[size_t(best)]) best = k;

  const StandardizedData data = standardize(d.X_train, d.Y_train, true, false);
  const double lmax = (data.X.transpose() * data.Y).cwiseAbs().maxCoeff() / double(d.X_train.rows());
  const LambdaGrid grid = lambda_grid(lmax, grid_size, lmax * grid_floor_ratio);
  Vector warm = Vector::Zero(d.X_train.cols());
  LassoFit lf;
  for (int i = 0; i <= best; ++i) {  // warm-started walk down the grid
    lf = oracle_lasso(data.X, data.Y.col(0), grid[i], 10000, 1e-8, &warm);
    warm = lf.beta;
  }
  const double y_mean = data.y_stats.mean[0];
  const Matrix yhat =
      ((apply_standardization(d.X_test, data.x_stats) * lf.beta).array() + y_mean).matrix();
  BenchFit out;
  out.mspe = mspe(d.Y_test, yhat);
  for (int j = 0; j < lf.beta.size(); ++j)
    if (lf.beta[j] != 0.0) out.support.push_back(j);
  out.factors = int(out.support.size());
  return out;
}

// ---------------------------------------------------------------------------
// Scenario driver

struct SimConfig {
  std::string scenario;
  bool multivariate = false;
  int n = 0, p = 0, q = 1, p_true = 0;
  double snr = 1;
  int replicates = 30;
  std::uint64_t seed = 1;
  int grid_size = 25;
  int cv_folds = 10;
  int threads = 1;
};

inline SimConfig scenario_config(const std::string& name) {
  SimConfig c;
  c.scenario = name;
  auto uni = [&](int n, int p, double snr) {
    c.n = n;
    c.p = p;
    c.snr = snr;
    c.p_true = 3 * p / 4;
  };
  auto multi = [&](int n, int p, int p_true, double snr) {
    c.multivariate = true;
    c.n = n;
    c.p = p;
    c.q = 10;
    c.p_true = p_true;
    c.snr = snr;
  };
  if (name == "u1") uni(400, 40, 10);
  else if (name == "u2") uni(400, 40, 5);
  else if (name == "u3") uni(40, 80, 10);
  else if (name == "u4") uni(40, 80, 5);
  else if (name == "m1") multi(400, 40, 5, 2);
  else if (name == "m2") multi(400, 40, 5, 1);
  else if (name == "m3") multi(40, 80, 10, 2);
  else if (name == "m4") multi(40, 80, 10, 1);
  else if (name == "smoke") {
    uni(20, 8, 10);
    c.replicates = 1;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return c;
}

struct ReplicateRow {
  int replicate = 0;
  bool ok = false;
  std::string error;
  double mspe = std::numeric_limits<double>::quiet_NaN();
  double tpr = std::numeric_limits<double>::quiet_NaN();
  double fpr = std::numeric_limits<double>::quiet_NaN();
  int factors = 0;
  int support = 0;
};

struct MethodSummary {
  std::string method;
  std::vector<ReplicateRow> rows;
  int failed = 0;
  double mspe_mean = 0, mspe_sd = 0;
  double tpr_mean = 0, tpr_sd = 0;
  double fpr_mean = 0, fpr_sd = 0;
};

struct ScenarioResult {
  SimConfig config;
  std::vector<MethodSummary> methods;
};

namespace detail_bench {

inline void summarize(MethodSummary& m) {
  std::vector<double> ms, ts, fs;
  for (const auto& r : m.rows) {
    if (!r.ok) {
      ++m.failed;
      continue;
    }
    ms.push_back(r.mspe);
    ts.push_back(r.tpr);
    fs.push_back(r.fpr);
  }
  m.mspe_mean = mean_sd(ms, &m.mspe_sd);
  m.tpr_mean = mean_sd(ts, &m.tpr_sd);
  m.fpr_mean = mean_sd(fs, &m.fpr_sd);
}

inline std::uint64_t fold_seed(std::uint64_t seed, int replicate) {
  return seed + 0x9e3779b97f4a7c15ull * std::uint64_t(replicate + 1);
}

}  // namespace detail_bench

inline ScenarioResult run_scenario(const SimConfig& cfg) {
  if (cfg.n < 2 || cfg.p < 2) throw ConfigError("run_scenario: n and p must be at least 2");
  if (cfg.replicates < 1) throw ConfigError("run_scenario: need at least one replicate");
  if (!(cfg.snr > 0)) throw ConfigError("run_scenario: snr must be positive");
  if (cfg.cv_folds < 2) throw ConfigError("run_scenario: need at least two folds");
  if (cfg.grid_size < 2) throw ConfigError("run_scenario: grid too small");

  const std::vector<std::string> roster =
      cfg.multivariate ? std::vector<std::string>{"rpls", "pls"}
                       : std::vector<std::string>{"rpls", "pls", "lasso"};
  ScenarioResult result;
  result.config = cfg;
  for (const auto& name : roster) {
    MethodSummary m;
    m.method = name;
    m.rows.resize(size_t(cfg.replicates));
    result.methods.push_back(std::move(m));
  }

  auto run_replicate = [&](int r) {
    const SimData d =
        cfg.multivariate
            ? gen_multivariate(cfg.n, cfg.p, cfg.q, cfg.p_true, cfg.snr, cfg.seed,
                               std::uint64_t(r))
            : gen_univariate(cfg.n, cfg.p, cfg.snr, cfg.seed, std::uint64_t(r));
    for (size_t mi = 0; mi < roster.size(); ++mi) {
      ReplicateRow& row = result.methods[mi].rows[size_t(r)];
      row.replicate = r;
      try {
        BenchFit fit;
        if (roster[mi] == "rpls")
          fit = cfg.multivariate
                    ? fit_multivariate_rpls(d, cfg.grid_size)
                    : fit_univariate_rpls(d, cfg.grid_size, cfg.cv_folds,
                                          detail_bench::fold_seed(cfg.seed, r));
        else if (roster[mi] == "pls")
          fit = fit_pls_baseline(d, cfg.multivariate);
        else
          fit = fit_lasso_baseline(d, cfg.grid_size, cfg.cv_folds,
                                   detail_bench::fold_seed(cfg.seed, r));
        const SupportRates rates = support_rates(fit.support, d.truth, cfg.p);
        row.mspe = fit.mspe;
        row.tpr = rates.tpr;
        row.fpr = rates.fpr;
        row.factors = fit.factors;
        row.support = int(fit.support.size());
        row.ok = true;
      } catch (const Error& e) {
        row.error = e.what();
      }
    }
  };

  const int workers = std::max(1, std::min(cfg.threads, cfg.replicates));
  if (workers == 1) {
    for (int r = 0; r < cfg.replicates; ++r) run_replicate(r);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < cfg.replicates; r += workers) run_replicate(r);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& m : result.methods) detail_bench::summarize(m);
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic classed spectra: 27 samples in 5 classes on a 600-point grid,
// each class a sum of 3-5 well-separated Gaussian peaks over a shared smooth
// baseline, plus N(0, 0.1^2) noise, clamped to stay nonnegative.

struct SpectraDemo {
  Matrix X;  // 27×600
  std::vector<std::string> labels;
  Vector positions;                           // 0.00 .. 5.99
  std::vector<std::vector<int>> class_peaks;  // grid indices of planted peaks
  double noise_sd = 0.1;
};

inline SpectraDemo gen_spectra_demo(std::uint64_t seed) {
  constexpr int n = 27, p = 600, classes = 5;
  const int class_size[classes] = {6, 6, 5, 5, 5};
  Rng rng(seed);

  SpectraDemo demo;
  demo.positions.resize(p);
  for (int j = 0; j < p; ++j) demo.positions[j] = 0.01 * j;

  // 25 candidate peak slots, 0.22 apart: neighbors are >5 widths away, so
  // class profiles never overlap at each other's centers
  std::vector<double> slots(25);
  for (int k = 0; k < 25; ++k) slots[size_t(k)] = 0.2 + 0.22 * k;
  rng.shuffle(slots.begin(), slots.end());

  Matrix profile = Matrix::Zero(classes, p);
  size_t slot_at = 0;
  demo.class_peaks.resize(classes);
  for (int c = 0; c < classes; ++c) {
    const int peaks = 3 + int(rng.below(3));  // 3..5
    for (int k = 0; k < peaks; ++k) {
      const double center = slots[slot_at++];
      const double amp = rng.uniform(1.5, 3.0);
      const double width = rng.uniform(0.03, 0.06);
      for (int j = 0; j < p; ++j) {
        const double t = (demo.positions[j] - center) / width;
        profile(c, j) += amp * std::exp(-0.5 * t * t);
      }
      demo.class_peaks[size_t(c)].push_back(int(std::lround(center / 0.01)));
    }
  }

  demo.X.resize(n, p);
  int row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < class_size[c]; ++s, ++row) {
      demo.labels.push_back("class" + std::to_string(c + 1));
      const double gain = 1.0 + 0.05 * rng.normal();
      for (int j = 0; j < p; ++j) {
        const double baseline = 0.4 + 0.25 * std::pow(std::sin(1.3 * demo.positions[j] + 0.7), 2);
        demo.X(row, j) =
            std::max(0.0, baseline + gain * profile(c, j) + rng.normal(0.0, demo.noise_sd));
      }
    }
  }
  return demo;
}

}  // namespace rpls
