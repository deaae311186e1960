#pragma once

#include <vector>

#include "rpls/types.hpp"

namespace rpls {

// Column standardization of one matrix. Zero-variance columns are centered but
// left unscaled (scale 1) and reported, never divided by ~0.
struct ColumnStats {
  Matrix values;
  Vector mean;
  Vector scale;  // all ones when scaling was off
  std::vector<int> degenerate;
  bool scaled = false;
};

inline ColumnStats standardize_columns(const Matrix& a, bool scale) {
  check_data(a, "standardize");
  const Eigen::Index n = a.rows(), p = a.cols();
  ColumnStats out;
  out.mean = a.colwise().mean();
  out.values = a.rowwise() - out.mean.transpose();
  out.scale = Vector::Ones(p);
  out.scaled = scale;
  if (scale) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = std::sqrt(out.values.col(j).squaredNorm() / double(n - 1));
      if (sd < 1e-12) {
        out.degenerate.push_back(int(j));
      } else {
        out.scale[j] = sd;
        out.values.col(j) /= sd;
      }
    }
  }
  return out;
}

inline Matrix apply_standardization(const Matrix& a, const ColumnStats& s) {
  if (a.cols() != s.mean.size()) throw DimensionMismatch("apply_standardization: column count");
  return (a.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

inline Matrix invert_standardization(const Matrix& a, const ColumnStats& s) {
  if (a.cols() != s.mean.size()) throw DimensionMismatch("invert_standardization: column count");
  return (a.array().rowwise() * s.scale.transpose().array()).matrix().rowwise() +
         s.mean.transpose();
}

// Paired predictor/response standardization used by every fit entry point.
// X is z-scored (optionally), Y is centered (optionally scaled for the
// multivariate benchmark protocol).
struct StandardizedData {
  Matrix X;
  Matrix Y;
  ColumnStats x_stats;
  ColumnStats y_stats;
};

inline StandardizedData standardize(const Matrix& X, const Matrix& Y, bool scale_x = true,
                                    bool scale_y = false) {
  if (X.rows() != Y.rows()) throw DimensionMismatch("standardize: X and Y row counts differ");
  StandardizedData d;
  d.x_stats = standardize_columns(X, scale_x);
  d.y_stats = standardize_columns(Y, scale_y);
  d.X = d.x_stats.values;
  d.Y = d.y_stats.values;
  d.x_stats.values.resize(0, 0);  // keep the metadata, drop the duplicate payload
  d.y_stats.values.resize(0, 0);
  return d;
}

}  // namespace rpls
