// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/error.hpp>
#include <pcdc/numerics/tensor.hpp>

#include <cmath>

namespace pcdc::eval {

/// Mean absolute error over every element.
inline double mae(const Tensor &pred, const Tensor &truth) {
  pred.require_same_shape(truth, "mae");
  if (pred.empty())
    throw DimensionError("mae on empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

/// Root mean squared error over every element.
inline double rmse(const Tensor &pred, const Tensor &truth) {
  pred.require_same_shape(truth, "rmse");
  if (pred.empty())
    throw DimensionError("rmse on empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

} // namespace pcdc::eval
