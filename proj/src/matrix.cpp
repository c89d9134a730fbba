// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/matrix.hpp"

#include <cmath>
#include <limits>

namespace cdconv {

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::kArgument,
          "matrix shapes differ");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
  }
  return worst;
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
  const double diff = max_abs_diff(a, b);
  if (diff == 0.0) return 0.0;
  double scale = 0.0;
  for (double v : b.values()) scale = std::max(scale, std::abs(v));
  return diff / std::max(scale, std::numeric_limits<double>::min());
}

Matrix vstack(std::span<const Matrix> parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.empty() ? 0 : parts.front().cols();
  for (const auto& p : parts) {
    require(p.cols() == cols, ErrorKind::kArgument, "vstack: column counts differ");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.values().begin(), p.values().end());
  return Matrix(rows, cols, std::move(data));
}

}  // namespace cdconv
