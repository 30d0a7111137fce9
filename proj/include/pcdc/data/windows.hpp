// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/data/normalize.hpp>
#include <pcdc/data/series.hpp>

#include <array>
#include <vector>

namespace pcdc::data {

/// One forecasting instance. Time runs over -T'+1 .. T with t0 = 0 the last
/// observed step: history tensors cover -T'+1..0, drivers cover -T'+1..T.
struct WindowedSample {
  Tensor x_hist;   ///< [T' x V x 2]
  Tensor p_all;    ///< [(T'+T) x V x 8]
  Tensor q_all;    ///< [(T'+T) x V x 6]
  Tensor x_future; ///< [T x V x 2]
  std::size_t origin_index = 0; ///< bundle step of t0

  [[nodiscard]] std::size_t history() const { return x_hist.dim(0); }
  [[nodiscard]] std::size_t horizon() const { return x_future.dim(0); }
  [[nodiscard]] std::size_t num_stations() const { return x_hist.dim(1); }
};

inline WindowedSample cut_window(const SeriesBundle &b, std::size_t start,
                                 std::size_t history, std::size_t horizon) {
  const std::size_t mid = start + history, end = mid + horizon;
  return WindowedSample{b.X.slices(start, mid), b.P.slices(start, end),
                        b.Q.slices(start, end), b.X.slices(mid, end), mid - 1};
}

/// Number of window origins before gap masking: floor((n - T' - T)/stride) + 1.
inline std::size_t window_count(std::size_t steps, std::size_t history,
                                std::size_t horizon, std::size_t stride) {
  if (stride == 0 || steps < history + horizon)
    return 0;
  return (steps - history - horizon) / stride + 1;
}

/// Sliding windows lying entirely inside `range`, skipping any that touch
/// an excluded step.
inline std::vector<WindowedSample> make_windows(const SeriesBundle &b,
                                                std::size_t history,
                                                std::size_t horizon,
                                                std::size_t stride, StepRange range) {
  if (history < 2)
    throw ValidationError("history length must be at least 2");
  if (horizon < 1)
    throw ValidationError("horizon must be at least 1");
  if (stride < 1)
    throw ValidationError("stride must be at least 1");
  range.end = std::min(range.end, b.steps());
  std::vector<WindowedSample> out;
  const std::size_t n = window_count(range.size(), history, horizon, stride);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t start = range.begin + w * stride;
    bool bad = false;
    for (std::size_t t = start; t < start + history + horizon && !bad; ++t)
      bad = !b.excluded.empty() && b.excluded[t];
    if (!bad)
      out.push_back(cut_window(b, start, history, horizon));
  }
  return out;
}

inline std::vector<WindowedSample> make_windows(const SeriesBundle &b,
                                                std::size_t history,
                                                std::size_t horizon,
                                                std::size_t stride = 1) {
  return make_windows(b, history, horizon, stride, StepRange{0, b.steps()});
}

/// Chronological train/val/test step ranges from fractional ratios.
inline std::array<StepRange, 3> split_ranges(std::size_t steps, double train_frac,
                                             double val_frac) {
  if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac >= 1.0)
    throw ValidationError("split fractions must satisfy 0 < train, 0 <= val, "
                          "train + val < 1");
  const auto a = static_cast<std::size_t>(static_cast<double>(steps) * train_frac);
  const auto c = static_cast<std::size_t>(static_cast<double>(steps) *
                                          (train_frac + val_frac));
  return {StepRange{0, a}, StepRange{a, c}, StepRange{c, steps}};
}

} // namespace pcdc::data
