#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "rpls/errors.hpp"

namespace rpls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void check_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw BadShape(std::string(what) + ": non-finite entries");
}

// data-matrix preconditions shared by the fitting entry points
inline void check_data(const Matrix& x, const char* what, Eigen::Index min_rows = 2) {
  if (x.rows() < min_rows || x.cols() < 1)
    throw BadShape(std::string(what) + ": need at least " + std::to_string(min_rows) +
                   " rows and 1 column");
  check_finite(x, what);
}

}  // namespace rpls
